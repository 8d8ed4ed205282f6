#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrdebug/generator.hpp"

namespace mrdebug::explain {

enum class Space { input, internal };

std::string_view to_string(Space space);
/// Throws ParameterError for anything but "input" or "internal".
Space parse_space(std::string_view text);

/// The dataset cannot support an explanation (no rows, one class only, no
/// trace features).
class Skipped : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::vector<bool> fail;  // label per row
  std::vector<std::int64_t> case_ids;

  std::size_t size() const { return rows.size(); }
  std::size_t fail_count() const;
  /// Throws ParameterError on ragged rows or mismatched label columns.
  void validate() const;
};

/// Missing internal features take this value, paired with a
/// "<name>:present" indicator column.
inline constexpr double kMissing = -1.0;

/// Input space: source-variable fields (booleans 0/1, one indicator per enum
/// tag, named "sts_MFS"). Internal space: the union of the source outputs'
/// trace features. Names carry a "var." prefix when the relation has more
/// than one source variable. Throws Skipped.
FeatureMatrix build_dataset(std::span<const generator::TestCase> cases, Space space);

/// 1 - p_fail² - p_pass²; throws ParameterError when both counts are zero.
double gini(std::int64_t fail_count, std::int64_t pass_count);

struct Split {
  double threshold = 0.0;
  double decrease = 0.0;  // parent impurity minus weighted child impurity
};

/// Best midpoint threshold (rows ≤ threshold go left). Ties go to the
/// smallest threshold. Empty when no midpoint leaves `min_leaf` rows on both
/// sides, in particular when all values are equal.
std::optional<Split> best_split(std::span<const double> values, const std::vector<bool>& fail,
                                std::size_t min_leaf = 1);

struct TreeParams {
  int max_depth = 5;
  int min_samples_leaf = 5;
  /// Greedy candidates re-ranked by a one-level lookahead while at least two
  /// levels of depth remain.
  int lookahead_candidates = 16;

  void validate() const;
};

struct Node {
  bool leaf = true;
  int feature = -1;
  double threshold = 0.0;
  int left = -1;   // value ≤ threshold
  int right = -1;  // value > threshold
  bool fail_class = true;
  std::int64_t fails = 0;
  std::int64_t passes = 0;
  int depth = 0;
};

struct DecisionTree {
  std::vector<std::string> features;
  std::vector<Node> nodes;  // nodes[0] is the root
  TreeParams params;

  int depth() const;
  /// Index of the leaf a row is routed to.
  int leaf_for(std::span<const double> row) const;
  /// Row-weighted Gini impurity over the leaves.
  double training_impurity() const;
  std::optional<std::string> root_feature() const;
};

DecisionTree fit_cart(const FeatureMatrix& matrix, const TreeParams& params = {});

enum class Format { dot, text };

std::string render_tree(const DecisionTree& tree, Format format);

/// Shortest round-trip decimal form: "60", "-0.5", "56844.5".
std::string format_number(double value);

}  // namespace mrdebug::explain
