#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dermabench/labels.hpp"
#include "dermabench/tensor.hpp"

namespace dermabench::data {

/// Identifies a dataset and the validation regime applied when loading it.
/// Exactly one of expected_counts / expected_total drives the count check:
/// expected_counts demands exact per-split sizes; expected_total demands the
/// archive's split sizes to sum to it and to match split_ratio within
/// ratio_tolerance.
struct DatasetDescriptor {
  std::string name;
  int resolution = 28;
  std::optional<std::array<int64_t, 3>> expected_counts;  // (train, validation, test)
  std::optional<int64_t> expected_total;
  std::array<double, 3> split_ratio = {0.7, 0.1, 0.2};
  double ratio_tolerance = 0.01;

  static DatasetDescriptor dermamnist();    // 28x28, 10015 total, 70:10:20
  static DatasetDescriptor dermamnist_c();  // 224x224, exactly (8208, 575, 1232)

  std::string archive_filename() const;  // lowercased name + ".npz"
};

/// Lightweight view of one labeled image inside a split.
struct ImageView {
  int side = 0;
  std::span<const uint8_t> pixels;  // side*side*3, HWC, 8-bit
  ClassLabel label;
};

/// One split stored as a contiguous NHWC uint8 blob plus labels.
class Split {
 public:
  Split() = default;
  Split(int side, std::vector<uint8_t> pixels, std::vector<uint8_t> labels);

  size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  int side() const { return side_; }
  size_t image_bytes() const { return static_cast<size_t>(side_) * side_ * 3; }

  std::span<const uint8_t> pixels(size_t i) const;
  ClassLabel label(size_t i) const { return ClassLabel(labels_[i]); }
  uint8_t label_code(size_t i) const { return labels_[i]; }
  ImageView at(size_t i) const { return {side_, pixels(i), label(i)}; }

  const std::vector<uint8_t>& raw_pixels() const { return pixels_; }
  const std::vector<uint8_t>& raw_labels() const { return labels_; }

  std::array<int64_t, kClassCount> class_histogram() const;
  /// Code of the most frequent class (lowest code wins ties).
  int majority_class() const;

 private:
  int side_ = 0;
  std::vector<uint8_t> pixels_;
  std::vector<uint8_t> labels_;
};

struct DatasetBundle {
  DatasetDescriptor descriptor;
  Split train;
  Split validation;
  Split test;

  int64_t total() const {
    return static_cast<int64_t>(train.size() + validation.size() + test.size());
  }
};

/// Loads and validates a dataset archive (.npz with train/val/test image and
/// label arrays). Throws LoadError (missing archive), IntegrityError (counts
/// or shapes disagree with the descriptor) or CorruptionError (label outside
/// [0,6]).
DatasetBundle load_dataset(const DatasetDescriptor& descriptor, const std::string& path);

/// One-hot probability vector; 1.0 at label.code().
std::array<float, kClassCount> one_hot(ClassLabel label);

// ---- normalization ------------------------------------------------------

enum class NormalizeMode { unit_interval, backbone_preprocess };

/// The concrete pixel mapping applied by normalize_images. unit_interval is
/// p/255; imagenet_bgr_mean is channel-swapped mean subtraction (the classic
/// ImageNet convention); pm_one is p/127.5 - 1.
enum class PixelTransform { unit_interval, imagenet_bgr_mean, pm_one };

std::string_view to_string(PixelTransform t);

/// unit_interval mapping evaluated in double precision; multiplying the
/// result by 255 recovers the original pixel value to well below 1e-9.
double unit_interval_value(uint8_t pixel);

Tensor normalize_split(const Split& split, PixelTransform transform);

struct NormalizedBundle {
  Tensor train;
  Tensor validation;
  Tensor test;
  PixelTransform transform;
};

/// Spec-level mode dispatch: unit_interval ignores backbone_transform;
/// backbone_preprocess applies it. Unknown modes raise ConfigError.
NormalizedBundle normalize_images(const DatasetBundle& bundle, NormalizeMode mode,
                                  PixelTransform backbone_transform = PixelTransform::unit_interval);

// ---- geometry -----------------------------------------------------------

/// Bilinear resize (half-pixel centers). target == source is a bitwise copy;
/// constant images stay constant. Downscaling requires allow_downscale.
Split resize_split(const Split& split, int target_side);
DatasetBundle resize_images(const DatasetBundle& bundle, int target_side,
                            bool allow_downscale = false);

// ---- class weights ------------------------------------------------------

struct ClassWeights {
  std::array<double, kClassCount> weight{};
  double at(int code) const { return weight[static_cast<size_t>(code)]; }
  static ClassWeights ones();
};

/// Inverse-frequency weights w_c = N/(K*n_c) over an arbitrary histogram.
/// Throws ContractError if any count is zero.
std::vector<double> inverse_frequency_weights(std::span<const int64_t> counts);

/// 7-class wrapper over the training split; requires every class present.
ClassWeights compute_class_weights(const Split& train);

// ---- subsampling --------------------------------------------------------

/// Deterministic per-class subsample of every split: k_c = round(fraction*n_c)
/// per class, original sample order preserved. Throws ContractError when a
/// class would be eliminated.
DatasetBundle stratified_subsample(const DatasetBundle& bundle, double fraction, uint64_t seed);

}  // namespace dermabench::data
