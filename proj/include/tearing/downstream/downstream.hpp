#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "tearing/train/train.hpp"

namespace tearing {

class TableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One row per scene: codeword plus count and shape-presence labels.
struct CodewordTable {
  std::vector<std::string> ids;
  std::vector<int> k;
  std::vector<std::array<bool, 5>> has;
  std::vector<std::vector<double>> codes;

  std::size_t size() const { return ids.size(); }
  std::size_t dim() const { return codes.empty() ? 0 : codes.front().size(); }
  void validate() const;
  void push_back(std::string id, int count, std::array<bool, 5> presence, std::vector<double> code);
};

/// Encoder output for every cloud of a split, in manifest order.
CodewordTable extract_codes(const LoadedModel& model, const std::filesystem::path& manifest, const std::string& split,
                            std::size_t workers = 1);

/// Columns scene_id,k,has_sphere,...,has_cone,c_0..c_{d-1}; values in %.17g.
void write_codes_csv(const std::filesystem::path& path, const CodewordTable& table);
CodewordTable read_codes_csv(const std::filesystem::path& path);

struct SvmOptions {
  double c = 10.0;          // weight of the mean hinge loss against 0.5 |w|^2
  std::size_t iterations = 400;
  bool standardize = false;  // z-score features with training statistics
};

/// One-vs-rest linear max-margin classifier trained by full-batch
/// subgradient descent (Pegasos step sizes, averaged second half of the
/// iterates). The bias is an extra feature whose value is the mean training
/// row norm, so rescaling all rows by s > 0 together with c -> c / s^2
/// rescales the weights by 1 / s and leaves every decision unchanged.
class LinearClassifier {
 public:
  static LinearClassifier train(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                const SvmOptions& options);

  int predict(const std::vector<double>& x) const;
  std::vector<double> scores(const std::vector<double>& x) const;
  const std::vector<int>& classes() const { return classes_; }

 private:
  std::vector<double> features(const std::vector<double>& x) const;

  std::vector<int> classes_;
  std::vector<std::vector<double>> weights_;  // per class, last entry multiplies bias_feature_
  double bias_feature_ = 1.0;
  std::vector<double> mean_, scale_;
};

/// Fold of every row (0..folds-1): rows are grouped by label, ordered within
/// a group by a seeded hash of the scene id, and dealt round-robin. The
/// assignment does not depend on row order.
std::vector<int> stratified_folds(const std::vector<std::string>& ids, const std::vector<int>& labels,
                                  std::size_t folds, std::uint64_t seed);

struct CountResult {
  double mae = 0.0;            // classifier, mean over rotations
  double mae_majority = 0.0;   // constant predictor (training-fold majority)
  double mae_shuffled = 0.0;   // classifier on seeded shuffled labels
  double mae_chance = 0.0;     // E|k_i - k_j| under the label histogram
  std::vector<double> fold_mae;
  std::vector<std::string> warnings;
};

/// Train on one fold, test on the others, for each of `folds` rotations.
CountResult count_cv(const CodewordTable& table, std::uint64_t seed, std::size_t folds = 4,
                     const SvmOptions& options = {});

/// Expected |a - b| for a, b drawn independently from the labels.
double chance_mae(const std::vector<int>& labels);

struct PresenceResult {
  double accuracy = 0.0;
  double majority_accuracy = 0.0;
  std::vector<std::string> warnings;
};

/// "Contains a torus" analog of a binary detection task, same protocol.
PresenceResult presence_cv(const CodewordTable& table, std::size_t shape, std::uint64_t seed, std::size_t folds = 4,
                           const SvmOptions& options = {});

struct DkRow {
  int k = 0;
  std::size_t count = 0;
  double d_raw = 0.0;
  double stderr_raw = 0.0;
  double d = 0.0;  // min-max normalized over the rows
  double stderr = 0.0;
};

struct DkResult {
  std::vector<DkRow> rows;
  std::vector<std::string> warnings;
};

/// Mean distance of each count's codewords to the mean codeword of the
/// largest count, with standard errors.
DkResult dk_analysis(const CodewordTable& table);

void write_dk_csv(const std::filesystem::path& path, const DkResult& result);

struct ResultRow {
  std::string task;
  std::string variant;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
};

/// Columns task,variant,metric,value,seed.
void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

}  // namespace tearing
