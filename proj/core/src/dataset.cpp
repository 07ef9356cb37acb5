#include "dermabench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dermabench/npz.hpp"
#include "dermabench/rng.hpp"

namespace dermabench::data {

namespace {

// ImageNet channel means in BGR order (B, G, R).
constexpr std::array<float, 3> kImagenetBgrMean = {103.939f, 116.779f, 123.68f};

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

DatasetDescriptor DatasetDescriptor::dermamnist() {
  DatasetDescriptor d;
  d.name = "DermaMNIST";
  d.resolution = 28;
  d.expected_total = 10015;
  d.split_ratio = {0.7, 0.1, 0.2};
  d.ratio_tolerance = 0.01;
  return d;
}

DatasetDescriptor DatasetDescriptor::dermamnist_c() {
  DatasetDescriptor d;
  d.name = "DermaMNIST-C";
  d.resolution = 224;
  d.expected_counts = {{8208, 575, 1232}};
  return d;
}

std::string DatasetDescriptor::archive_filename() const { return lowercase(name) + ".npz"; }

Split::Split(int side, std::vector<uint8_t> pixels, std::vector<uint8_t> labels)
    : side_(side), pixels_(std::move(pixels)), labels_(std::move(labels)) {
  if (pixels_.size() != labels_.size() * image_bytes())
    throw ContractError("split: pixel buffer size does not match label count");
}

std::span<const uint8_t> Split::pixels(size_t i) const {
  return {pixels_.data() + i * image_bytes(), image_bytes()};
}

std::array<int64_t, kClassCount> Split::class_histogram() const {
  std::array<int64_t, kClassCount> h{};
  for (uint8_t code : labels_) ++h[code];
  return h;
}

int Split::majority_class() const {
  auto h = class_histogram();
  return static_cast<int>(std::max_element(h.begin(), h.end()) - h.begin());
}

namespace {

Split split_from_arrays(const npz::Array& images, const npz::Array& labels,
                        const DatasetDescriptor& d, const std::string& split_name) {
  if (images.dtype != npz::Dtype::u8)
    throw IntegrityError(d.name + " " + split_name + ": images must be 8-bit");
  if (images.shape.size() != 4 || images.shape[3] != 3)
    throw IntegrityError(d.name + " " + split_name + ": images must be N x H x W x 3");
  if (images.shape[1] != d.resolution || images.shape[2] != d.resolution)
    throw IntegrityError(d.name + " " + split_name + ": expected " +
                         std::to_string(d.resolution) + "x" + std::to_string(d.resolution) +
                         " images, got " + std::to_string(images.shape[1]) + "x" +
                         std::to_string(images.shape[2]));

  int64_t n = images.shape[0];
  int64_t label_count = labels.numel();
  if (labels.shape.size() > 2 || (labels.shape.size() == 2 && labels.shape[1] != 1))
    throw IntegrityError(d.name + " " + split_name + ": labels must be N or N x 1");
  if (label_count != n)
    throw IntegrityError(d.name + " " + split_name + ": " + std::to_string(n) + " images but " +
                         std::to_string(label_count) + " labels");

  std::vector<uint8_t> codes(static_cast<size_t>(label_count));
  switch (labels.dtype) {
    case npz::Dtype::u8: {
      auto src = labels.as<uint8_t>();
      std::copy(src.begin(), src.end(), codes.begin());
      break;
    }
    case npz::Dtype::i8: {
      auto src = labels.as<int8_t>();
      for (size_t i = 0; i < codes.size(); ++i) codes[i] = static_cast<uint8_t>(src[i]);
      break;
    }
    case npz::Dtype::i32: {
      auto src = labels.as<int32_t>();
      for (size_t i = 0; i < codes.size(); ++i) codes[i] = static_cast<uint8_t>(src[i]);
      break;
    }
    case npz::Dtype::i64: {
      auto src = labels.as<int64_t>();
      for (size_t i = 0; i < codes.size(); ++i) codes[i] = static_cast<uint8_t>(src[i]);
      break;
    }
    default:
      throw IntegrityError(d.name + " " + split_name + ": labels must be integer-typed");
  }
  for (size_t i = 0; i < codes.size(); ++i) {
    int64_t raw = 0;
    switch (labels.dtype) {
      case npz::Dtype::u8: raw = labels.as<uint8_t>()[i]; break;
      case npz::Dtype::i8: raw = labels.as<int8_t>()[i]; break;
      case npz::Dtype::i32: raw = labels.as<int32_t>()[i]; break;
      case npz::Dtype::i64: raw = labels.as<int64_t>()[i]; break;
      default: break;
    }
    if (raw < 0 || raw >= kClassCount)
      throw CorruptionError(d.name + " " + split_name + ": label " + std::to_string(raw) +
                            " at index " + std::to_string(i) + " outside [0,6]");
  }

  std::vector<uint8_t> pixels(images.data.size());
  std::memcpy(pixels.data(), images.data.data(), images.data.size());
  return Split(d.resolution, std::move(pixels), std::move(codes));
}

void validate_counts(const DatasetDescriptor& d, const DatasetBundle& b) {
  std::array<int64_t, 3> actual = {static_cast<int64_t>(b.train.size()),
                                   static_cast<int64_t>(b.validation.size()),
                                   static_cast<int64_t>(b.test.size())};
  if (d.expected_counts) {
    const auto& exp = *d.expected_counts;
    static const char* names[3] = {"train", "validation", "test"};
    for (int i = 0; i < 3; ++i) {
      if (actual[static_cast<size_t>(i)] != exp[static_cast<size_t>(i)])
        throw IntegrityError(d.name + " " + names[i] + ": expected " +
                             std::to_string(exp[static_cast<size_t>(i)]) + " images, found " +
                             std::to_string(actual[static_cast<size_t>(i)]));
    }
  } else if (d.expected_total) {
    int64_t total = actual[0] + actual[1] + actual[2];
    if (total != *d.expected_total)
      throw IntegrityError(d.name + ": expected " + std::to_string(*d.expected_total) +
                           " images in total, found " + std::to_string(total));
    static const char* names[3] = {"train", "validation", "test"};
    for (int i = 0; i < 3; ++i) {
      double share = static_cast<double>(actual[static_cast<size_t>(i)]) / static_cast<double>(total);
      double want = d.split_ratio[static_cast<size_t>(i)];
      if (std::abs(share - want) > d.ratio_tolerance)
        throw IntegrityError(d.name + " " + names[i] + ": split share " + std::to_string(share) +
                             " deviates from " + std::to_string(want) + " by more than " +
                             std::to_string(d.ratio_tolerance));
    }
  }
  auto train_hist = b.train.class_histogram();
  for (int c = 0; c < kClassCount; ++c) {
    if (train_hist[static_cast<size_t>(c)] == 0)
      throw IntegrityError(d.name + " train: class " + std::string(class_name(c)) + " is absent");
  }
}

}  // namespace

DatasetBundle load_dataset(const DatasetDescriptor& descriptor, const std::string& path) {
  npz::ArrayMap arrays;
  try {
    arrays = npz::load(path);
  } catch (const LoadError&) {
    throw;
  }
  static const std::array<std::pair<const char*, const char*>, 3> keys = {{
      {"train_images", "train_labels"},
      {"val_images", "val_labels"},
      {"test_images", "test_labels"},
  }};
  for (const auto& [img, lab] : keys) {
    if (!arrays.count(img) || !arrays.count(lab))
      throw IntegrityError(descriptor.name + ": archive " + path + " lacks array '" +
                           (arrays.count(img) ? lab : img) + "'");
  }

  DatasetBundle bundle;
  bundle.descriptor = descriptor;
  bundle.train = split_from_arrays(arrays.at("train_images"), arrays.at("train_labels"),
                                   descriptor, "train");
  bundle.validation = split_from_arrays(arrays.at("val_images"), arrays.at("val_labels"),
                                        descriptor, "validation");
  bundle.test = split_from_arrays(arrays.at("test_images"), arrays.at("test_labels"),
                                  descriptor, "test");
  validate_counts(descriptor, bundle);
  return bundle;
}

std::array<float, kClassCount> one_hot(ClassLabel label) {
  std::array<float, kClassCount> v{};
  v[static_cast<size_t>(label.code())] = 1.0f;
  return v;
}

std::string_view to_string(PixelTransform t) {
  switch (t) {
    case PixelTransform::unit_interval: return "unit_interval";
    case PixelTransform::imagenet_bgr_mean: return "imagenet_bgr_mean";
    case PixelTransform::pm_one: return "pm_one";
  }
  return "?";
}

double unit_interval_value(uint8_t pixel) { return static_cast<double>(pixel) / 255.0; }

Tensor normalize_split(const Split& split, PixelTransform transform) {
  int64_t n = static_cast<int64_t>(split.size());
  int64_t side = split.side();
  Tensor out({n, side, side, 3});
  const uint8_t* src = split.raw_pixels().data();
  float* dst = out.data();
  int64_t count = out.numel();
  switch (transform) {
    case PixelTransform::unit_interval: {
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < count; ++i)
        dst[i] = static_cast<float>(static_cast<double>(src[i]) / 255.0);
      break;
    }
    case PixelTransform::pm_one: {
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < count; ++i)
        dst[i] = static_cast<float>(static_cast<double>(src[i]) / 127.5 - 1.0);
      break;
    }
    case PixelTransform::imagenet_bgr_mean: {
      // RGB source -> BGR with per-channel mean subtraction.
#pragma omp parallel for schedule(static)
      for (int64_t p = 0; p < count / 3; ++p) {
        const uint8_t* px = src + p * 3;
        float* q = dst + p * 3;
        q[0] = static_cast<float>(px[2]) - kImagenetBgrMean[0];
        q[1] = static_cast<float>(px[1]) - kImagenetBgrMean[1];
        q[2] = static_cast<float>(px[0]) - kImagenetBgrMean[2];
      }
      break;
    }
  }
  return out;
}

NormalizedBundle normalize_images(const DatasetBundle& bundle, NormalizeMode mode,
                                  PixelTransform backbone_transform) {
  PixelTransform t;
  switch (mode) {
    case NormalizeMode::unit_interval: t = PixelTransform::unit_interval; break;
    case NormalizeMode::backbone_preprocess: t = backbone_transform; break;
    default: throw ConfigError("normalize_images: unknown mode");
  }
  NormalizedBundle out{normalize_split(bundle.train, t), normalize_split(bundle.validation, t),
                       normalize_split(bundle.test, t), t};
  return out;
}

namespace {

std::vector<uint8_t> resize_plane(const std::vector<uint8_t>& src, size_t count, int s_side,
                                  int t_side) {
  size_t src_img = static_cast<size_t>(s_side) * s_side * 3;
  size_t dst_img = static_cast<size_t>(t_side) * t_side * 3;
  std::vector<uint8_t> dst(count * dst_img);
  double scale = static_cast<double>(s_side) / t_side;

  // Precompute the 1-D sampling grid once; rows and columns share it.
  std::vector<int> lo(static_cast<size_t>(t_side)), hi(static_cast<size_t>(t_side));
  std::vector<float> frac(static_cast<size_t>(t_side));
  for (int t = 0; t < t_side; ++t) {
    double sc = (t + 0.5) * scale - 0.5;
    double fl = std::floor(sc);
    int l = static_cast<int>(fl);
    lo[static_cast<size_t>(t)] = std::clamp(l, 0, s_side - 1);
    hi[static_cast<size_t>(t)] = std::clamp(l + 1, 0, s_side - 1);
    frac[static_cast<size_t>(t)] = static_cast<float>(std::clamp(sc - fl, 0.0, 1.0));
  }

#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(count); ++i) {
    const uint8_t* sp = src.data() + static_cast<size_t>(i) * src_img;
    uint8_t* dp = dst.data() + static_cast<size_t>(i) * dst_img;
    for (int y = 0; y < t_side; ++y) {
      int y0 = lo[static_cast<size_t>(y)], y1 = hi[static_cast<size_t>(y)];
      float fy = frac[static_cast<size_t>(y)];
      for (int x = 0; x < t_side; ++x) {
        int x0 = lo[static_cast<size_t>(x)], x1 = hi[static_cast<size_t>(x)];
        float fx = frac[static_cast<size_t>(x)];
        for (int c = 0; c < 3; ++c) {
          float v00 = sp[(y0 * s_side + x0) * 3 + c];
          float v01 = sp[(y0 * s_side + x1) * 3 + c];
          float v10 = sp[(y1 * s_side + x0) * 3 + c];
          float v11 = sp[(y1 * s_side + x1) * 3 + c];
          float top = v00 + (v01 - v00) * fx;
          float bot = v10 + (v11 - v10) * fx;
          float v = top + (bot - top) * fy;
          dp[(y * t_side + x) * 3 + c] =
              static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
      }
    }
  }
  return dst;
}

}  // namespace

Split resize_split(const Split& split, int target_side) {
  if (target_side <= 0) throw ConfigError("resize: target side must be positive");
  if (target_side == split.side()) {
    return Split(split.side(), split.raw_pixels(), split.raw_labels());
  }
  auto pixels = resize_plane(split.raw_pixels(), split.size(), split.side(), target_side);
  return Split(target_side, std::move(pixels), split.raw_labels());
}

DatasetBundle resize_images(const DatasetBundle& bundle, int target_side, bool allow_downscale) {
  if (target_side <= 0) throw ConfigError("resize: target side must be positive");
  if (target_side < bundle.descriptor.resolution && !allow_downscale)
    throw ConfigError("resize: target " + std::to_string(target_side) + " below source " +
                      std::to_string(bundle.descriptor.resolution) +
                      " requires allow_downscale");
  DatasetBundle out;
  out.descriptor = bundle.descriptor;
  out.descriptor.resolution = target_side;
  out.train = resize_split(bundle.train, target_side);
  out.validation = resize_split(bundle.validation, target_side);
  out.test = resize_split(bundle.test, target_side);
  return out;
}

ClassWeights ClassWeights::ones() {
  ClassWeights w;
  w.weight.fill(1.0);
  return w;
}

std::vector<double> inverse_frequency_weights(std::span<const int64_t> counts) {
  int64_t total = std::accumulate(counts.begin(), counts.end(), int64_t{0});
  size_t k = counts.size();
  std::vector<double> weights(k);
  for (size_t c = 0; c < k; ++c) {
    if (counts[c] <= 0)
      throw ContractError("class weights: class " + std::to_string(c) +
                          " has no samples; weight undefined");
    weights[c] = static_cast<double>(total) / (static_cast<double>(k) * counts[c]);
  }
  return weights;
}

ClassWeights compute_class_weights(const Split& train) {
  auto hist = train.class_histogram();
  auto w = inverse_frequency_weights(hist);
  ClassWeights out;
  std::copy(w.begin(), w.end(), out.weight.begin());
  return out;
}

namespace {

Split subsample_split(const Split& split, double fraction, uint64_t seed, int split_index) {
  auto hist = split.class_histogram();
  std::array<int64_t, kClassCount> want{};
  for (int c = 0; c < kClassCount; ++c) {
    if (hist[static_cast<size_t>(c)] == 0) continue;  // absent class stays absent
    want[static_cast<size_t>(c)] = std::llround(fraction * hist[static_cast<size_t>(c)]);
    if (want[static_cast<size_t>(c)] < 1)
      throw ContractError("stratified_subsample: fraction " + std::to_string(fraction) +
                          " eliminates class " + std::string(class_name(c)));
  }

  std::array<std::vector<uint32_t>, kClassCount> by_class;
  for (size_t i = 0; i < split.size(); ++i)
    by_class[split.label_code(i)].push_back(static_cast<uint32_t>(i));

  std::vector<uint32_t> selected;
  for (int c = 0; c < kClassCount; ++c) {
    auto& idx = by_class[static_cast<size_t>(c)];
    auto k = static_cast<size_t>(want[static_cast<size_t>(c)]);
    Rng rng(derive_seed(seed, "subsample", static_cast<uint64_t>(split_index) * 16 +
                                               static_cast<uint64_t>(c)));
    // Partial Fisher-Yates: the first k slots are the sample.
    for (size_t i = 0; i < k && i < idx.size(); ++i) {
      std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    selected.insert(selected.end(), idx.begin(), idx.begin() + static_cast<ptrdiff_t>(k));
  }
  std::sort(selected.begin(), selected.end());  // keep original sample order

  std::vector<uint8_t> pixels(selected.size() * split.image_bytes());
  std::vector<uint8_t> labels(selected.size());
  for (size_t i = 0; i < selected.size(); ++i) {
    auto px = split.pixels(selected[i]);
    std::copy(px.begin(), px.end(), pixels.begin() + static_cast<ptrdiff_t>(i * split.image_bytes()));
    labels[i] = split.label_code(selected[i]);
  }
  return Split(split.side(), std::move(pixels), std::move(labels));
}

}  // namespace

DatasetBundle stratified_subsample(const DatasetBundle& bundle, double fraction, uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ContractError("stratified_subsample: fraction must be in (0,1]");
  DatasetBundle out;
  out.descriptor = bundle.descriptor;
  out.descriptor.expected_counts.reset();
  out.descriptor.expected_total.reset();
  out.train = subsample_split(bundle.train, fraction, seed, 0);
  out.validation = subsample_split(bundle.validation, fraction, seed, 1);
  out.test = subsample_split(bundle.test, fraction, seed, 2);
  return out;
}

}  // namespace dermabench::data
