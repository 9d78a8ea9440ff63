#include "polsynth/dsl.hpp"

#include <charconv>
#include <string>
#include <vector>

#include "polsynth/error.hpp"

namespace polsynth {

namespace {

struct Line {
  std::size_t number;  // 1-based
  std::size_t indent;
  std::string_view content;
};

bool is_token_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

    std::size_t indent = 0;
    while (indent < raw.size() && raw[indent] == ' ') ++indent;
    if (indent < raw.size() && raw[indent] == '\t') {
      throw ParseError("tabs are not allowed for indentation", number, indent + 1);
    }
    std::string_view content = raw.substr(indent);
    while (!content.empty() && content.back() == ' ') content.remove_suffix(1);
    if (!content.empty()) lines.push_back({number, indent, content});

    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

class Parser {
 public:
  Parser(std::string_view text, const PredicateDictionary& dict)
      : lines_(split_lines(text)), dict_(dict) {}

  LexicalTree parse() {
    if (lines_.empty()) throw ParseError("empty policy", 1, 1);
    auto root = parse_node(0, 1);
    if (pos_ < lines_.size()) {
      const Line& extra = lines_[pos_];
      throw ParseError("unexpected text after the end of the policy", extra.number,
                       extra.indent + 1);
    }
    return LexicalTree(std::move(root));
  }

 private:
  NodePtr parse_node(std::size_t indent, std::size_t depth) {
    const Line& line = lines_[pos_];
    if (line.indent != indent) {
      throw ParseError("expected indentation of " + std::to_string(indent) + " spaces, found " +
                           std::to_string(line.indent),
                       line.number, line.indent + 1);
    }
    if (depth > kMaxTreeDepth) {
      throw ParseError("policy exceeds the maximum depth of " + std::to_string(kMaxTreeDepth),
                       line.number, line.indent + 1);
    }
    ++pos_;
    if (line.content.starts_with("if ")) return parse_decision(line, depth);
    if (line.content == "else:") {
      throw ParseError("'else:' without a matching 'if'", line.number, line.indent + 1);
    }
    return parse_action(line);
  }

  NodePtr parse_decision(const Line& line, std::size_t depth) {
    if (!line.content.ends_with(':')) {
      throw ParseError("expected ':' at the end of the condition", line.number,
                       line.indent + line.content.size() + 1);
    }
    std::string_view predicate = line.content.substr(3, line.content.size() - 4);
    const std::size_t predicate_column = line.indent + 4;

    auto on_true = parse_branch(line, depth, "true");
    if (pos_ >= lines_.size() || lines_[pos_].indent != line.indent ||
        lines_[pos_].content != "else:") {
      const std::size_t at = pos_ < lines_.size() ? lines_[pos_].number : line.number;
      throw ParseError("decision is missing its 'else:' branch", at, line.indent + 1);
    }
    const Line& else_line = lines_[pos_++];
    auto on_false = parse_branch(else_line, depth, "false");
    return build_decision(predicate, line.number, predicate_column, std::move(on_true),
                          std::move(on_false));
  }

  NodePtr parse_branch(const Line& header, std::size_t depth, const char* which) {
    if (pos_ >= lines_.size() || lines_[pos_].indent <= header.indent) {
      const std::size_t at = pos_ < lines_.size() ? lines_[pos_].number : header.number;
      throw ParseError(std::string("decision is missing its ") + which + " branch", at,
                       header.indent + 1);
    }
    return parse_node(header.indent + 2, depth + 1);
  }

  NodePtr build_decision(std::string_view predicate, std::size_t line, std::size_t column,
                         NodePtr on_true, NodePtr on_false) {
    std::size_t name_end = 0;
    while (name_end < predicate.size() && is_token_char(predicate[name_end])) ++name_end;
    if (name_end == 0) throw ParseError("expected a predicate", line, column);
    const std::string name(predicate.substr(0, name_end));

    if (name_end == predicate.size()) {
      if (dict_.role(name) != TokenRole::decision) {
        throw ParseError("'" + name + "' is not a " + std::string(to_string(dict_.domain())) +
                             " predicate",
                         line, column);
      }
      return make_decision(name, std::move(on_true), std::move(on_false));
    }

    // Learned comparison: "<feature> <op> <number>".
    std::string_view rest = predicate.substr(name_end);
    if (rest.size() < 4 || rest[0] != ' ' || (rest[1] != '>' && rest[1] != '<') ||
        rest[2] != ' ') {
      throw ParseError("expected '<feature> > <number>' or a single predicate token", line,
                       column + name_end);
    }
    const auto feature = dict_.find_feature(name);
    if (!feature) {
      throw ParseError("'" + name + "' is not a " + std::string(to_string(dict_.domain())) +
                           " feature",
                       line, column);
    }
    const Direction direction = rest[1] == '>' ? Direction::greater : Direction::less;
    std::string_view number = rest.substr(3);
    double display = 0.0;
    const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), display);
    if (ec != std::errc() || ptr != number.data() + number.size()) {
      throw ParseError("malformed number '" + std::string(number) + "'", line, column + name_end + 3);
    }
    const double value = display / dict_.features()[*feature].display_scale;
    return make_learned_decision(dict_, *feature, direction, value, std::move(on_true),
                                 std::move(on_false));
  }

  NodePtr parse_action(const Line& line) {
    for (std::size_t i = 0; i < line.content.size(); ++i) {
      if (!is_token_char(line.content[i])) {
        throw ParseError("action lines hold exactly one token", line.number,
                         line.indent + i + 1);
      }
    }
    const std::string token(line.content);
    if (dict_.role(token) != TokenRole::action) {
      throw ParseError("'" + token + "' is not a " + std::string(to_string(dict_.domain())) +
                           " action",
                       line.number, line.indent + 1);
    }
    return make_leaf(token);
  }

  std::vector<Line> lines_;
  const PredicateDictionary& dict_;
  std::size_t pos_ = 0;
};

}  // namespace

LexicalTree parse_dsl(std::string_view text, const PredicateDictionary& dict) {
  return Parser(text, dict).parse();
}

}  // namespace polsynth
