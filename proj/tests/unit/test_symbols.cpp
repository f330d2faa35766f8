#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string headers_text() {
  std::string all;
  for (const auto& entry : fs::directory_iterator(fs::path(GICOPT_SOURCE_DIR) / "include" / "gicopt")) {
    std::ifstream in(entry.path());
    std::stringstream ss;
    ss << in.rdbuf();
    all += ss.str();
  }
  return all;
}

// Body of `struct name { ... };` by brace matching.
std::string struct_body(const std::string& text, const std::string& name) {
  const std::regex head("struct " + name + "\\s*\\{");
  std::smatch m;
  if (!std::regex_search(text, m, head)) return {};
  std::size_t i = static_cast<std::size_t>(m.position(0) + m.length(0));
  int depth = 1;
  const std::size_t start = i;
  for (; i < text.size() && depth > 0; ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}') --depth;
  }
  return text.substr(start, i - start);
}

}  // namespace

TEST(SymbolTable, EveryFormulationSymbolHasAField) {
  std::ifstream in(fs::path(GICOPT_SOURCE_DIR) / "tests" / "data" / "symbols.csv");
  ASSERT_TRUE(in);
  const std::string text = headers_text();
  std::string line;
  std::getline(in, line);
  ASSERT_EQ(line, "symbol,meaning,type,member");
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 4u) << line;
    const std::string body = struct_body(text, cols[2]);
    ASSERT_FALSE(body.empty()) << "no struct " << cols[2];
    const std::regex member("[\\s>*&]" + cols[3] + "\\s*(=|;|,|\\{|\\()");
    EXPECT_TRUE(std::regex_search(body, member)) << cols[0] << " -> " << cols[2] << "::" << cols[3];
    ++rows;
  }
  EXPECT_GE(rows, 60);
}
