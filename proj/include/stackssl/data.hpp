#pragma once

#include "stackssl/tensor.hpp"
#include "stackssl/tensor_io.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stackssl {

enum class Split : std::uint8_t { labeled_train = 0, unlabeled_train = 1, validation = 2, test = 3, excluded = 4 };

using LabelMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Thrown when code reads a label that training is not allowed to see.
class HiddenLabelAccess : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FactorKind { center_x, center_y, radius, intensity, background };

struct FactorRange {
  FactorKind kind;
  double lo;
  double hi;
};

// label = factor > threshold (or < threshold when greater is false)
struct LabelRule {
  std::string name;
  std::size_t factor;
  double threshold;
  bool greater = true;
};

struct FactorSpec {
  std::vector<FactorRange> factors;
  std::vector<LabelRule> labels;

  // Five factors (blob x, blob y, radius, intensity, background gradient) and
  // four labels thresholding x, y, radius and intensity at their midpoints.
  static FactorSpec default_spec();
  void validate() const;
};

struct DatasetBundle {
  std::size_t width = 0;
  Matrix<double> images;  // N x W*W, values in [0,1]
  Matrix<double> factors;  // N x F ground truth, empty for imported data
  std::vector<std::uint8_t> label_known;
  std::vector<Split> split;
  std::vector<std::string> label_names;

  std::size_t size() const { return static_cast<std::size_t>(images.rows()); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(images.cols()); }
  std::size_t label_count() const { return static_cast<std::size_t>(labels_.cols()); }

  std::vector<std::size_t> indices(Split s) const;
  // labeled_train followed by unlabeled_train.
  std::vector<std::size_t> training_indices() const;

  // Guarded access: throws HiddenLabelAccess for unlabeled_train rows and
  // rows whose labels are unknown.
  std::uint8_t label(std::size_t row, std::size_t column) const;
  Matrix<double> label_rows(std::span<const std::size_t> rows) const;
  Matrix<double> image_rows(std::span<const std::size_t> rows) const;

  // Unguarded; for split construction and data tooling only.
  const LabelMatrix& raw_labels() const { return labels_; }
  void set_labels(LabelMatrix labels) { labels_ = std::move(labels); }

 private:
  LabelMatrix labels_;
};

// Renders n images of an anti-aliased filled ellipse over a horizontal
// background gradient from independently sampled factors. Deterministic per seed.
DatasetBundle generate_synthetic(const FactorSpec& spec, std::size_t n, std::size_t width, std::uint64_t seed);

// One image, for a fixed factor vector ordered as spec.factors.
std::vector<double> render_image(const FactorSpec& spec, std::span<const double> factor_values, std::size_t width);

// Greedy balanced labeled set (scarcest label first, k positives per label),
// then n_val validation and n_test test samples; the rest become unlabeled.
DatasetBundle make_splits(DatasetBundle bundle, std::size_t k_per_label, std::size_t n_val, std::size_t n_test,
                          std::uint64_t seed);

std::vector<TensorEntry> bundle_entries(const DatasetBundle& bundle);
DatasetBundle bundle_from_entries(std::span<const TensorEntry> entries);
void save_bundle(const std::filesystem::path& path, const DatasetBundle& bundle);
DatasetBundle load_bundle(const std::filesystem::path& path);

// CSV manifest: header "path,<label_1>,...,<label_L>[,exclude]". Each path names
// an 8-bit grayscale image (binary PGM, or headerless square raw bytes), resized
// to width x width by nearest neighbour. An empty or "-1" label cell marks the
// row's labels unknown; exclude=1 rows are put in the excluded split.
DatasetBundle import_csv_manifest(const std::filesystem::path& manifest, std::size_t width);

std::vector<double> resize_nearest(std::span<const double> image, std::size_t in_w, std::size_t in_h,
                                   std::size_t out_w);

}  // namespace stackssl
