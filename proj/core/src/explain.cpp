#include "mrdebug/explain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "mrdebug/errors.hpp"

namespace mrdebug::explain {

namespace {

constexpr double kTol = 1e-12;

std::string prefixed(const generator::TestCase& tc, std::size_t var, const std::string& name) {
  return tc.source_count > 1 ? tc.variables[var] + "." + name : name;
}

void require_two_classes(const FeatureMatrix& m) {
  if (m.rows.empty()) throw Skipped("no test cases");
  const std::size_t f = m.fail_count();
  if (f == 0 || f == m.size()) throw Skipped("single class");
}

FeatureMatrix input_dataset(std::span<const generator::TestCase> cases) {
  FeatureMatrix m;
  const auto& first = cases.front();
  const Schema& schema = *first.bindings.front().schema();
  for (std::size_t v = 0; v < first.source_count; ++v) {
    for (const auto& f : schema.fields()) {
      if (f.is_enum()) {
        for (const auto& tag : f.enumeration().values) m.names.push_back(prefixed(first, v, f.name + "_" + tag));
      } else {
        m.names.push_back(prefixed(first, v, f.name));
      }
    }
  }
  for (const auto& tc : cases) {
    std::vector<double> row;
    row.reserve(m.names.size());
    for (std::size_t v = 0; v < tc.source_count; ++v) {
      const Record& r = tc.bindings[v];
      for (std::size_t i = 0; i < schema.size(); ++i) {
        const FieldSpec& f = schema.field(i);
        const auto& value = r.at(i);
        if (f.is_enum()) {
          const std::string* tag = value ? &std::get<EnumTag>(*value).tag : nullptr;
          for (const auto& t : f.enumeration().values) row.push_back(tag && *tag == t ? 1.0 : 0.0);
        } else if (f.is_boolean()) {
          row.push_back(value && std::get<bool>(*value) ? 1.0 : 0.0);
        } else {
          row.push_back(value ? std::get<Decimal>(*value).to_double() : kMissing);
        }
      }
    }
    if (row.size() != m.names.size()) throw ParameterError("test cases disagree on their source variables");
    m.rows.push_back(std::move(row));
    m.fail.push_back(!tc.pass);
    m.case_ids.push_back(tc.id);
  }
  return m;
}

FeatureMatrix internal_dataset(std::span<const generator::TestCase> cases) {
  std::vector<std::map<std::string, double>> observed;
  std::set<std::string> names;
  for (const auto& tc : cases) {
    std::map<std::string, double> row;
    for (std::size_t v = 0; v < tc.source_count && v < tc.outputs.size(); ++v) {
      if (!tc.outputs[v]) continue;
      for (const auto& feature : tc.outputs[v]->trace) {
        row[prefixed(tc, v, feature.name)] = feature.value.to_double();
      }
    }
    for (const auto& [name, value] : row) names.insert(name);
    observed.push_back(std::move(row));
  }
  if (names.empty()) throw Skipped("no trace features");

  std::set<std::string> columns = names;
  for (const auto& name : names) {
    const bool sometimes_missing =
        std::any_of(observed.begin(), observed.end(), [&](const auto& row) { return !row.count(name); });
    if (sometimes_missing) columns.insert(name + ":present");
  }
  FeatureMatrix m;
  m.names.assign(columns.begin(), columns.end());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::vector<double> row;
    row.reserve(m.names.size());
    for (const auto& name : m.names) {
      constexpr std::string_view suffix = ":present";
      const bool indicator = name.size() > suffix.size() && name.ends_with(suffix) &&
                             names.count(name.substr(0, name.size() - suffix.size())) && !names.count(name);
      if (indicator) {
        row.push_back(observed[i].count(name.substr(0, name.size() - suffix.size())) ? 1.0 : 0.0);
      } else {
        const auto it = observed[i].find(name);
        row.push_back(it == observed[i].end() ? kMissing : it->second);
      }
    }
    m.rows.push_back(std::move(row));
    m.fail.push_back(!cases[i].pass);
    m.case_ids.push_back(cases[i].id);
  }
  return m;
}

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
  double lookahead = 0.0;
};

bool less_tol(double a, double b) { return a < b - kTol; }

// Impurities compared on a 1e-12 grid so that ranking stays a strict weak
// order.
std::int64_t quantize(double x) { return std::llround(x / kTol); }

class Builder {
 public:
  Builder(const FeatureMatrix& m, const TreeParams& p) : m_(m), p_(p) {}

  DecisionTree run() {
    tree_.features = m_.names;
    tree_.params = p_;
    std::vector<std::size_t> rows(m_.size());
    std::iota(rows.begin(), rows.end(), 0);
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  std::pair<std::int64_t, std::int64_t> counts(const std::vector<std::size_t>& rows) const {
    std::int64_t f = 0;
    for (auto r : rows) f += m_.fail[r] ? 1 : 0;
    return {f, static_cast<std::int64_t>(rows.size()) - f};
  }

  double impurity(const std::vector<std::size_t>& rows) const {
    const auto [f, p] = counts(rows);
    return gini(f, p);
  }

  // Every admissible midpoint split of `rows`, over all features; `lookahead`
  // starts out as the weighted child impurity.
  std::vector<Candidate> candidates(const std::vector<std::size_t>& rows) const {
    std::vector<Candidate> out;
    const auto n = static_cast<double>(rows.size());
    const auto [fails, passes] = counts(rows);
    const double parent = gini(fails, passes);
    const auto min_leaf = static_cast<std::size_t>(p_.min_samples_leaf);
    std::vector<std::pair<double, bool>> col(rows.size());
    for (std::size_t f = 0; f < m_.names.size(); ++f) {
      for (std::size_t i = 0; i < rows.size(); ++i) col[i] = {m_.rows[rows[i]][f], m_.fail[rows[i]]};
      std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      std::int64_t left_fail = 0;
      for (std::size_t i = 0; i + 1 < col.size(); ++i) {
        left_fail += col[i].second ? 1 : 0;
        if (col[i].first == col[i + 1].first) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = col.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const std::int64_t lf = left_fail;
        const std::int64_t lp = static_cast<std::int64_t>(nl) - lf;
        const std::int64_t rf = fails - lf;
        const std::int64_t rp = passes - lp;
        const double child = (static_cast<double>(nl) * gini(lf, lp) + static_cast<double>(nr) * gini(rf, rp)) / n;
        out.push_back({static_cast<int>(f), (col[i].first + col[i + 1].first) / 2.0, parent - child, child});
      }
    }
    return out;
  }

  static bool greedy_better(const Candidate& a, const Candidate& b) {
    if (quantize(a.decrease) != quantize(b.decrease)) return quantize(a.decrease) > quantize(b.decrease);
    if (a.threshold != b.threshold) return a.threshold < b.threshold;
    return a.feature < b.feature;
  }

  static bool lookahead_better(const Candidate& a, const Candidate& b) {
    if (quantize(a.lookahead) != quantize(b.lookahead)) return quantize(a.lookahead) < quantize(b.lookahead);
    return greedy_better(a, b);
  }

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(const std::vector<std::size_t>& rows,
                                                                          const Candidate& c) const {
    std::vector<std::size_t> left, right;
    for (auto r : rows) (m_.rows[r][c.feature] <= c.threshold ? left : right).push_back(r);
    return {left, right};
  }

  // Impurity after splitting `rows` once more at its best greedy split.
  double one_level(const std::vector<std::size_t>& rows) const {
    const auto cs = candidates(rows);
    double best = impurity(rows);
    for (const auto& c : cs) best = std::min(best, c.lookahead);
    return best;
  }

  int grow(const std::vector<std::size_t>& rows, int depth) {
    const auto [f, p] = counts(rows);
    const int index = static_cast<int>(tree_.nodes.size());
    Node node;
    node.fails = f;
    node.passes = p;
    node.depth = depth;
    node.fail_class = f >= p;
    tree_.nodes.push_back(node);

    const double parent = gini(f, p);
    if (depth >= p_.max_depth || parent <= kTol ||
        rows.size() < 2 * static_cast<std::size_t>(p_.min_samples_leaf)) {
      return index;
    }
    auto cs = candidates(rows);
    if (cs.empty()) return index;
    std::sort(cs.begin(), cs.end(), greedy_better);
    Candidate chosen = cs.front();
    if (p_.max_depth - depth >= 2) {
      if (cs.size() > static_cast<std::size_t>(p_.lookahead_candidates)) cs.resize(static_cast<std::size_t>(p_.lookahead_candidates));
      const auto n = static_cast<double>(rows.size());
      for (auto& c : cs) {
        const auto [left, right] = partition(rows, c);
        c.lookahead = (static_cast<double>(left.size()) * one_level(left) +
                       static_cast<double>(right.size()) * one_level(right)) / n;
      }
      chosen = *std::min_element(cs.begin(), cs.end(), lookahead_better);
      if (chosen.decrease <= kTol && !less_tol(chosen.lookahead, parent)) return index;
    } else if (chosen.decrease <= kTol) {
      return index;
    }
    const auto [left, right] = partition(rows, chosen);
    tree_.nodes[index].leaf = false;
    tree_.nodes[index].feature = chosen.feature;
    tree_.nodes[index].threshold = chosen.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[index].left = l;
    tree_.nodes[index].right = r;
    return index;
  }

  const FeatureMatrix& m_;
  const TreeParams& p_;
  DecisionTree tree_;
};

std::string leaf_label(const Node& n) {
  return std::string(n.fail_class ? "fail" : "pass") + " (fail=" + std::to_string(n.fails) +
         ", pass=" + std::to_string(n.passes) + ")";
}

std::string split_label(const DecisionTree& t, const Node& n) {
  return t.features[static_cast<std::size_t>(n.feature)] + " ≤ " + format_number(n.threshold);
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

void render_text(const DecisionTree& t, int index, const std::string& indent, std::string& out) {
  const Node& n = t.nodes[static_cast<std::size_t>(index)];
  if (n.leaf) return;
  const int kids[2] = {n.left, n.right};
  for (int k = 0; k < 2; ++k) {
    const Node& c = t.nodes[static_cast<std::size_t>(kids[k])];
    out += indent + (k == 0 ? "├─ " : "└─ ") + (k == 0 ? "yes: " : "no: ");
    out += c.leaf ? leaf_label(c) : split_label(t, c);
    out += '\n';
    render_text(t, kids[k], indent + "  ", out);
  }
}

}  // namespace

std::string_view to_string(Space space) { return space == Space::input ? "input" : "internal"; }

Space parse_space(std::string_view text) {
  if (text == "input") return Space::input;
  if (text == "internal") return Space::internal;
  throw ParameterError("space must be input or internal, got " + std::string(text));
}

std::size_t FeatureMatrix::fail_count() const { return static_cast<std::size_t>(std::count(fail.begin(), fail.end(), true)); }

void FeatureMatrix::validate() const {
  if (fail.size() != rows.size()) throw ParameterError("label column does not match the rows");
  if (!case_ids.empty() && case_ids.size() != rows.size()) throw ParameterError("case ids do not match the rows");
  for (const auto& r : rows) {
    if (r.size() != names.size()) throw ParameterError("feature rows have different arity");
  }
}

FeatureMatrix build_dataset(std::span<const generator::TestCase> cases, Space space) {
  if (cases.empty()) throw Skipped("no test cases");
  FeatureMatrix m = space == Space::input ? input_dataset(cases) : internal_dataset(cases);
  require_two_classes(m);
  return m;
}

double gini(std::int64_t fail_count, std::int64_t pass_count) {
  if (fail_count < 0 || pass_count < 0) throw ParameterError("counts must be non-negative");
  const std::int64_t n = fail_count + pass_count;
  if (n == 0) throw ParameterError("Gini impurity of an empty node is undefined");
  const double pf = static_cast<double>(fail_count) / static_cast<double>(n);
  const double pp = static_cast<double>(pass_count) / static_cast<double>(n);
  return 1.0 - pf * pf - pp * pp;
}

std::optional<Split> best_split(std::span<const double> values, const std::vector<bool>& fail,
                                std::size_t min_leaf) {
  if (values.size() != fail.size()) throw ParameterError("values and labels differ in length");
  if (values.size() < 2) return std::nullopt;
  min_leaf = std::max<std::size_t>(min_leaf, 1);
  std::vector<std::pair<double, bool>> col;
  for (std::size_t i = 0; i < values.size(); ++i) col.emplace_back(values[i], fail[i]);
  std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const auto fails = static_cast<std::int64_t>(std::count(fail.begin(), fail.end(), true));
  const auto passes = static_cast<std::int64_t>(values.size()) - fails;
  const double parent = gini(fails, passes);
  const auto n = static_cast<double>(values.size());
  std::optional<Split> best;
  std::int64_t left_fail = 0;
  for (std::size_t i = 0; i + 1 < col.size(); ++i) {
    left_fail += col[i].second ? 1 : 0;
    if (col[i].first == col[i + 1].first) continue;
    const std::size_t nl = i + 1;
    const std::size_t nr = col.size() - nl;
    if (nl < min_leaf || nr < min_leaf) continue;
    const std::int64_t lp = static_cast<std::int64_t>(nl) - left_fail;
    const double child = (static_cast<double>(nl) * gini(left_fail, lp) +
                          static_cast<double>(nr) * gini(fails - left_fail, passes - lp)) / n;
    const double decrease = parent - child;
    if (!best || less_tol(best->decrease, decrease)) best = Split{(col[i].first + col[i + 1].first) / 2.0, decrease};
  }
  return best;
}

void TreeParams::validate() const {
  if (max_depth < 0) throw ParameterError("max_depth must be non-negative");
  if (min_samples_leaf < 1) throw ParameterError("min_samples_leaf must be at least 1");
  if (lookahead_candidates < 1) throw ParameterError("lookahead_candidates must be at least 1");
}

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

int DecisionTree::leaf_for(std::span<const double> row) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].leaf) {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return i;
}

double DecisionTree::training_impurity() const {
  double weighted = 0.0;
  std::int64_t total = 0;
  for (const auto& n : nodes) {
    if (!n.leaf) continue;
    weighted += static_cast<double>(n.fails + n.passes) * gini(n.fails, n.passes);
    total += n.fails + n.passes;
  }
  return total == 0 ? 0.0 : weighted / static_cast<double>(total);
}

std::optional<std::string> DecisionTree::root_feature() const {
  if (nodes.empty() || nodes.front().leaf) return std::nullopt;
  return features[static_cast<std::size_t>(nodes.front().feature)];
}

DecisionTree fit_cart(const FeatureMatrix& matrix, const TreeParams& params) {
  params.validate();
  matrix.validate();
  if (matrix.rows.empty()) throw ParameterError("cannot fit a tree without rows");
  return Builder(matrix, params).run();
}

std::string render_tree(const DecisionTree& tree, Format format) {
  std::string out;
  if (format == Format::text) {
    const Node& root = tree.nodes.front();
    out += (root.leaf ? leaf_label(root) : split_label(tree, root)) + "\n";
    render_text(tree, 0, "  ", out);
    return out;
  }
  out += "digraph tree {\n";
  out += "  node [shape=box, style=\"rounded,filled\", fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const Node& n = tree.nodes[i];
    const std::string label = n.leaf ? (std::string(n.fail_class ? "fail" : "pass") + "\\nfail=" +
                                        std::to_string(n.fails) + " pass=" + std::to_string(n.passes))
                                     : dot_escape(split_label(tree, n));
    const char* fill = !n.leaf ? "white" : (n.fail_class ? "orange" : "palegreen");
    out += "  n" + std::to_string(i) + " [label=\"" + label + "\", fillcolor=\"" + fill + "\"];\n";
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const Node& n = tree.nodes[i];
    if (n.leaf) continue;
    out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.left) + " [label=\"yes\"];\n";
    out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.right) + " [label=\"no\"];\n";
  }
  out += "}\n";
  return out;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace mrdebug::explain
