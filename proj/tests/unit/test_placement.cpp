#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <map>

#include "gicopt/error.hpp"
#include "gicopt/field_coupling.hpp"
#include "gicopt/placement.hpp"
#include "oracles.hpp"

using namespace gicopt;

namespace {

PlacementProblem problem(const std::string& name, PlacementObjective obj) {
  PlacementProblem p;
  p.network = oracle::bundled(name);
  p.objective = obj;
  if (obj == PlacementObjective::BlockerCost) p.served_frac = 0.85;
  else p.count = 1;
  return p;
}

// The small cases; EPRI21 runs in the acceptance binary.
const std::vector<std::string> kSmall = {"b4gic", "syn_loop4", "syn_chain6", "syn_mixed9"};

struct Variant {
  std::string label;
  PlacementProblem p;
};

std::vector<Variant> variants(const std::string& name) {
  std::vector<Variant> out;
  out.push_back({"blocker-cost", problem(name, PlacementObjective::BlockerCost)});
  auto strict = problem(name, PlacementObjective::BlockerCost);
  strict.served_frac = 1.0;
  out.push_back({"blocker-cost served 1.0", strict});
  out.push_back({"shed count 1", problem(name, PlacementObjective::Shed)});
  auto shed_budget = problem(name, PlacementObjective::Shed);
  shed_budget.count.reset();
  shed_budget.budget = 1.0;
  out.push_back({"shed budget 1", shed_budget});
  out.push_back({"gic-sq count 1", problem(name, PlacementObjective::GicSquared)});
  auto gic2 = problem(name, PlacementObjective::GicSquared);
  gic2.count = 2;
  gic2.count_sense = CountSense::AtMost;
  gic2.gic_set = GicSquareSet::AllEdges;
  out.push_back({"gic-sq edges at most 2", gic2});
  return out;
}

// Exact objective of every feasible blocker set, keyed by candidate mask.
std::map<std::uint64_t, double> exhaustive(const PlacementProblem& p) {
  const PlacementContext ctx = make_context(p);
  std::map<std::uint64_t, double> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << ctx.net.candidates.size()); ++m) {
    const BlockerConfig cfg = BlockerConfig::from_mask(ctx.net, m);
    if (!within_limits(ctx, cfg)) continue;
    const ConfigEvaluation ev = evaluate_config(ctx, cfg);
    if (ev.feasible) out[m] = ev.objective;
  }
  return out;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) { setenv("GICOPT_THREADS", value, 1); }
  ~EnvGuard() { unsetenv("GICOPT_THREADS"); }
};

}  // namespace

TEST(Placement, B4gicReproducesBenchmarkRow) {
  for (bool enumerate : {false, true}) {
    const auto p = problem("b4gic", PlacementObjective::BlockerCost);
    const PlacementSolution s = enumerate ? enumerate_optimal(p) : branch_and_bound(p);
    EXPECT_EQ(s.placed.size(), 1u);
    EXPECT_EQ(s.candidates, 2);
    EXPECT_DOUBLE_EQ(s.load_met, 1.0);
    EXPECT_DOUBLE_EQ(s.blocker_cost, 1.0);
    EXPECT_EQ(s.placed.front(), "T1");
    EXPECT_EQ(s.optimality, Optimality::Proved);
  }
}

TEST(Placement, BranchAndBoundMatchesEnumeration) {
  for (const auto& name : kSmall) {
    for (const auto& v : variants(name)) {
      std::optional<PlacementSolution> e, b;
      bool e_infeasible = false, b_infeasible = false;
      try {
        e = enumerate_optimal(v.p);
      } catch (const InfeasibleError&) {
        e_infeasible = true;
      }
      try {
        b = branch_and_bound(v.p);
      } catch (const InfeasibleError&) {
        b_infeasible = true;
      }
      ASSERT_EQ(e_infeasible, b_infeasible) << name << " / " << v.label;
      if (e_infeasible) continue;
      EXPECT_NEAR(b->objective, e->objective, 1e-6) << name << " / " << v.label;
      // With gap 0 the lexicographic tie-break makes the sets agree too.
      EXPECT_EQ(b->placed, e->placed) << name << " / " << v.label;
    }
  }
}

TEST(Placement, RelaxationBoundsAreValid) {
  for (const auto& name : kSmall) {
    for (const auto& v : variants(name)) {
      PlacementSolution s;
      try {
        s = branch_and_bound(v.p);
      } catch (const InfeasibleError&) {
        continue;
      }
      const auto all = exhaustive(v.p);
      for (const auto& rec : s.stats.log) {
        if (!rec.bound) continue;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [mask, obj] : all) {
          bool fits = true;
          for (std::size_t k = 0; k < rec.fixed.size(); ++k) {
            const int bit = static_cast<int>((mask >> k) & 1u);
            if (rec.fixed[k] >= 0 && rec.fixed[k] != bit) fits = false;
          }
          if (fits) best = std::min(best, obj);
        }
        if (std::isfinite(best))
          EXPECT_LE(*rec.bound, best + 1e-6 * std::max(1.0, std::abs(best))) << name << " / " << v.label;
      }
    }
  }
}

TEST(Placement, IncumbentsPassConstraintCheck) {
  for (const auto& name : kSmall) {
    for (const auto& v : variants(name)) {
      for (bool enumerate : {false, true}) {
        PlacementSolution s;
        try {
          s = enumerate ? enumerate_optimal(v.p) : branch_and_bound(v.p);
        } catch (const InfeasibleError&) {
          continue;
        }
        const ConstraintReport r = constraint_check(s, v.p);
        EXPECT_TRUE(r.all_pass) << name << " / " << v.label;
        for (const auto& c : r.constraints)
          if (c.active && c.name != "count") EXPECT_GE(c.slack, -1e-6) << name << " " << c.name;
      }
    }
  }
}

TEST(Placement, CountIsExact) {
  auto p = problem("syn_mixed9", PlacementObjective::GicSquared);
  for (int n : {0, 1, 2, 3}) {
    p.count = n;
    const PlacementSolution s = branch_and_bound(p);
    EXPECT_EQ(static_cast<int>(s.placed.size()), n);
    const ConstraintReport r = constraint_check(s, p);
    for (const auto& c : r.constraints)
      if (c.name == "count") EXPECT_EQ(c.slack, 0.0);
  }
}

TEST(Placement, ZeroBudgetNeverPlaces) {
  for (const auto& name : kSmall) {
    auto p = problem(name, PlacementObjective::BlockerCost);
    p.budget = 0.0;
    try {
      const PlacementSolution s = branch_and_bound(p);
      EXPECT_TRUE(s.placed.empty()) << name;
    } catch (const InfeasibleError&) {
    }
  }
}

TEST(Placement, ZeroCountGivesEmptyPlacement) {
  auto p = problem("syn_chain6", PlacementObjective::BlockerCost);
  p.count = 0;
  p.served_frac.reset();
  p.shed_cap = 1e6;
  const PlacementSolution s = branch_and_bound(p);
  EXPECT_TRUE(s.placed.empty());
  EXPECT_EQ(s.objective, 0.0);
}

TEST(Placement, ServedFractionIsALowerBound) {
  auto p = problem("b4gic", PlacementObjective::BlockerCost);
  const PlacementSolution s = branch_and_bound(p);
  EXPECT_GE(s.load_met, *p.served_frac);
}

TEST(Placement, InfeasibleRootNamesBindingConstraint) {
  auto p = problem("b4gic", PlacementObjective::BlockerCost);
  p.served_frac = 1.0;
  p.budget = 0.0;
  try {
    branch_and_bound(p);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.exit_code(), ExitCode::Infeasible);
    EXPECT_NE(std::string(e.what()).find("budget"), std::string::npos) << e.what();
  }
  auto q = problem("b4gic", PlacementObjective::BlockerCost);
  q.count = 5;
  try {
    enumerate_optimal(q);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("count"), std::string::npos) << e.what();
  }
}

TEST(Placement, MissingConstraintsAreUsageErrors) {
  auto shed = problem("b4gic", PlacementObjective::Shed);
  shed.count.reset();
  auto gic = problem("b4gic", PlacementObjective::GicSquared);
  gic.count.reset();
  auto neg = problem("b4gic", PlacementObjective::BlockerCost);
  neg.served_frac = 1.5;
  for (const auto* p : {&shed, &gic, &neg}) {
    try {
      branch_and_bound(*p);
      FAIL() << "expected usage error";
    } catch (const Error& e) {
      EXPECT_EQ(e.exit_code(), ExitCode::Usage);
    }
  }
}

TEST(Placement, EnumerationRefusesLargeCandidateSets) {
  // 21 substations on a line of latitude, each with a grounded step-up.
  NetworkCase c;
  c.name = "wide";
  for (int i = 0; i < 21; ++i) {
    const std::string k = std::to_string(i);
    c.substations.push_back({"S" + k, 40.0, -100.0 + i, 0.2});
    c.busses.push_back({"H" + k, 345.0, 0.9, 1.1, i == 0, "S" + k});
    c.busses.push_back({"L" + k, 20.0, 0.9, 1.1, false, "S" + k});
    Branch xb;
    xb.id = "T" + k;
    xb.from_bus = "H" + k;
    xb.to_bus = "L" + k;
    xb.b = -10.0;
    xb.s_max = 10.0;
    xb.kind = BranchKind::Transformer;
    xb.transformer = xb.id;
    c.branches.push_back(xb);
    Transformer t;
    t.id = xb.id;
    t.high_bus = xb.from_bus;
    t.low_bus = xb.to_bus;
    t.alpha = 345.0 / 20.0;
    t.winding_r.high = 0.3;
    t.grounded = default_grounding(t.config);
    c.transformers.push_back(t);
    c.candidates.push_back({t.id, 1.0});
    if (i > 0) {
      Branch l;
      l.id = "L" + std::to_string(i - 1) + "_" + k;
      l.from_bus = "H" + std::to_string(i - 1);
      l.to_bus = "H" + k;
      l.b = -20.0;
      l.s_max = 10.0;
      l.r_dc_per_phase = 3.0;
      c.branches.push_back(l);
    }
  }
  c.gmd = GmdField{1.0, 90.0};
  PlacementProblem p;
  p.network = c;
  p.objective = PlacementObjective::GicSquared;
  p.count = 1;
  try {
    enumerate_optimal(p);
    FAIL() << "expected usage error";
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), ExitCode::Usage);
    EXPECT_NE(std::string(e.what()).find("20"), std::string::npos);
  }
  // Branch-and-bound handles it.
  const PlacementSolution s = branch_and_bound(p);
  EXPECT_EQ(s.placed.size(), 1u);
}

TEST(Placement, ResultIndependentOfThreadCount) {
  const auto p = problem("syn_mixed9", PlacementObjective::GicSquared);
  PlacementSolution one, many;
  {
    EnvGuard g("1");
    one = enumerate_optimal(p);
  }
  {
    EnvGuard g("4");
    many = enumerate_optimal(p);
  }
  EXPECT_EQ(one.placed, many.placed);
  EXPECT_EQ(one.objective, many.objective);
}

TEST(Placement, GicSquaredObjective) {
  GicSolution g;
  g.edge_i = {100.0};
  EXPECT_DOUBLE_EQ(objective_gic_sq(g, GicSquareSet::AllEdges), 10000.0);
  EXPECT_EQ(objective_gic_sq(g, GicSquareSet::TransformerEffective), 0.0);

  const NetworkCase c = oracle::bundled("syn_mixed9");
  const DcNetwork base = build_dc_network(c);
  EXPECT_EQ(objective_gic_sq(solve_gic(apply_field(base, {0.0, 45.0}), {})), 0.0);
  const double one = objective_gic_sq(solve_gic(apply_field(base, *c.gmd), {}));
  const double two = objective_gic_sq(solve_gic(apply_field(base, {2.0 * c.gmd->magnitude, c.gmd->direction}), {}));
  EXPECT_GT(one, 0.0);
  EXPECT_NEAR(two, 4.0 * one, 1e-9 * two);
}

TEST(Placement, ReportsBeforeAndAfterCurrents) {
  const PlacementSolution s = branch_and_bound(problem("b4gic", PlacementObjective::BlockerCost));
  ASSERT_EQ(s.transformers.size(), 2u);
  for (const auto& t : s.transformers) {
    EXPECT_GT(t.i_eff_before, 0.0);
    EXPECT_NEAR(t.i_eff_after, 0.0, 1e-9);
  }
}

TEST(Placement, TimeLimitReportsIncumbentOrFails) {
  auto p = problem("syn_mixed9", PlacementObjective::GicSquared);
  p.time_limit_s = 0.0;
  try {
    const PlacementSolution s = branch_and_bound(p);
    EXPECT_EQ(s.optimality, Optimality::Timeout);
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("time limit"), std::string::npos);
  }
}
