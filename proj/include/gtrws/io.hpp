#ifndef GTRWS_IO_HPP
#define GTRWS_IO_HPP

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gtrws/decomposition.hpp"
#include "gtrws/error.hpp"
#include "gtrws/model.hpp"
#include "gtrws/trace.hpp"

namespace gtrws {

struct ParsedModel {
  Model model;
  JStructure js;
  std::optional<NodeOrder> order;
};

namespace detail {

struct Token {
  std::string text;
  std::size_t line;
};

class TokenStream {
 public:
  explicit TokenStream(std::string_view text) {
    std::size_t line = 1, i = 0;
    while (i < text.size()) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
        ++i;
      } else if (c == '#') {
        while (i < text.size() && text[i] != '\n') ++i;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
      } else {
        const std::size_t start = i;
        while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r' && text[i] != '\n' &&
               text[i] != '#')
          ++i;
        tokens_.push_back({std::string(text.substr(start, i - start)), line});
      }
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }
  const Token* peek() const { return done() ? nullptr : &tokens_[pos_]; }
  std::size_t line() const {
    if (tokens_.empty()) return 1;
    return done() ? tokens_.back().line : tokens_[pos_].line;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line()) + ": " + what);
  }

  const Token& next(const std::string& what) {
    if (done()) fail("unexpected end of input, expected " + what);
    return tokens_[pos_++];
  }

  std::size_t integer(const std::string& what) {
    const Token& t = next(what);
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) {
      --pos_;
      fail("expected " + what + ", got '" + t.text + "'");
    }
    return v;
  }

  bool number(double& out) {
    if (done()) return false;
    const Token& t = tokens_[pos_];
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), out);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) return false;
    ++pos_;
    return true;
  }

  bool keyword(std::string_view k) {
    if (done() || tokens_[pos_].text != k) return false;
    ++pos_;
    return true;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// HOMRF text: header, node count, label counts, factors (scope size, node ids, row-major table
/// over the sorted scope), an optional J section (edge count, factor index pairs) and an optional
/// ORDER section (node permutation). '#' starts a comment.
inline ParsedModel parse_model(std::string_view text) {
  detail::TokenStream ts(text);
  if (!ts.keyword("HOMRF")) ts.fail("missing HOMRF header");
  const std::size_t n = ts.integer("node count");
  std::vector<std::size_t> labels(n);
  for (auto& k : labels) k = ts.integer("label count");
  const std::size_t nf = ts.integer("factor count");
  std::vector<Factor> factors;
  factors.reserve(nf);
  for (std::size_t a = 0; a < nf; ++a) {
    const std::string who = "factor " + std::to_string(a);
    const std::size_t s = ts.integer(who + " scope size");
    Scope scope(s);
    for (auto& v : scope) {
      v = ts.integer(who + " node id");
      if (v >= n) throw Error(ErrorCode::InvalidNode, who + " references node " + std::to_string(v));
    }
    std::sort(scope.begin(), scope.end());
    const std::size_t size = joint_size(labels, scope);
    Table table;
    table.reserve(size);
    double val = 0.0;
    while (table.size() < size && ts.number(val)) table.push_back(val);
    if (table.size() < size)
      ts.fail(who + " table is truncated: expected " + std::to_string(size) + " values, got " +
              std::to_string(table.size()));
    factors.push_back({std::move(scope), std::move(table)});
  }
  std::vector<Edge> edges;
  if (ts.keyword("J")) {
    const std::size_t ne = ts.integer("edge count");
    for (std::size_t e = 0; e < ne; ++e) {
      const std::size_t a = ts.integer("edge source");
      const std::size_t b = ts.integer("edge target");
      edges.emplace_back(a, b);
    }
  }
  std::optional<NodeOrder> order;
  if (ts.keyword("ORDER")) {
    std::vector<NodeId> perm(n);
    for (auto& v : perm) v = ts.integer("node in ORDER");
    order = NodeOrder::from_permutation(std::move(perm));
  }
  if (!ts.done()) ts.fail("unexpected token '" + ts.peek()->text + "'");
  Model model(std::move(labels), std::move(factors));
  JStructure js = close_j(model, std::move(edges));
  return {std::move(model), std::move(js), std::move(order)};
}

inline ParsedModel read_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open file '" + path + "': file not found");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

inline std::string serialize_model(const Model& model, std::span<const Edge> edges,
                                   const std::optional<NodeOrder>& order = std::nullopt) {
  std::ostringstream out;
  out << "HOMRF\n" << model.node_count() << '\n';
  for (NodeId v = 0; v < model.node_count(); ++v) out << (v ? " " : "") << model.labels(v);
  out << '\n' << model.factor_count() << '\n';
  for (const auto& f : model.factors()) {
    out << f.scope.size();
    for (NodeId v : f.scope) out << ' ' << v;
    out << '\n';
    for (std::size_t i = 0; i < f.table.size(); ++i) out << (i ? " " : "") << detail::format_double(f.table[i]);
    out << '\n';
  }
  out << "J\n" << edges.size() << '\n';
  for (const auto& [a, b] : edges) out << a << ' ' << b << '\n';
  if (order) {
    out << "ORDER\n";
    for (std::size_t i = 0; i < order->size(); ++i) out << (i ? " " : "") << order->order[i];
    out << '\n';
  }
  return out.str();
}

inline std::string serialize_model(const Model& model, const JStructure& js,
                                   const std::optional<NodeOrder>& order = std::nullopt) {
  return serialize_model(model, js.edges, order);
}

inline void write_trace_csv(std::ostream& out, const BoundTrace& trace) {
  out << "pass,direction,method,bound,meff,ms\n";
  for (const auto& r : trace)
    out << r.pass << ',' << to_string(r.direction) << ',' << r.method << ',' << detail::format_double(r.bound) << ','
        << r.meff << ',' << r.ms << '\n';
}

}  // namespace gtrws

#endif  // GTRWS_IO_HPP
