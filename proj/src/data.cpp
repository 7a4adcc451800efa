#include "stackssl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

namespace stackssl {

namespace {

constexpr int kSupersample = 4;
constexpr double kEllipseAspect = 0.75;  // vertical semi-axis / horizontal semi-axis

double factor_or(const FactorSpec& spec, std::span<const double> values, FactorKind kind, double fallback) {
  for (std::size_t i = 0; i < spec.factors.size(); ++i) {
    if (spec.factors[i].kind == kind) return values[i];
  }
  return fallback;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

// Binary PGM (P5, maxval <= 255) or headerless square raw bytes.
std::vector<double> read_gray_image(const std::filesystem::path& path, std::size_t& w, std::size_t& h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t offset = 0;
  double maxval = 255.0;
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    std::size_t pos = 2;
    auto next_token = [&]() {
      while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
          while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(bytes[pos])) {
          ++pos;
        } else {
          break;
        }
      }
      std::string tok;
      while (pos < bytes.size() && !std::isspace(bytes[pos])) tok += static_cast<char>(bytes[pos++]);
      if (tok.empty()) throw DataError("malformed PGM header in " + path.string());
      return static_cast<std::size_t>(std::stoul(tok));
    };
    w = next_token();
    h = next_token();
    maxval = static_cast<double>(next_token());
    if (maxval <= 0 || maxval > 255) throw DataError("only 8-bit PGM supported: " + path.string());
    offset = pos + 1;
  } else {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(bytes.size()))));
    if (side == 0 || side * side != bytes.size()) {
      throw DataError("raw image is not square 8-bit grayscale: " + path.string());
    }
    w = h = side;
  }
  if (bytes.size() < offset + w * h) throw DataError("truncated image " + path.string());
  std::vector<double> out(w * h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(bytes[offset + i]) / maxval;
  return out;
}

}  // namespace

FactorSpec FactorSpec::default_spec() {
  FactorSpec s;
  s.factors = {
      {FactorKind::center_x, 0.3, 0.7},
      {FactorKind::center_y, 0.3, 0.7},
      {FactorKind::radius, 0.12, 0.30},
      {FactorKind::intensity, 0.6, 1.0},
      {FactorKind::background, 0.0, 0.1},
  };
  s.labels = {
      {"right", 0, 0.5, true},
      {"low", 1, 0.5, true},
      {"large", 2, 0.21, true},
      {"bright", 3, 0.8, true},
  };
  return s;
}

void FactorSpec::validate() const {
  if (factors.size() < 2) throw DataError("factor spec needs at least 2 factors");
  if (labels.size() < 2) throw DataError("factor spec needs at least 2 label rules");
  for (const auto& f : factors) {
    if (!(f.hi > f.lo)) throw DataError("factor range must have hi > lo");
  }
  for (const auto& rule : labels) {
    if (rule.factor >= factors.size()) {
      throw DataError("label rule '" + rule.name + "' references undeclared factor " + std::to_string(rule.factor));
    }
    const auto& f = factors[rule.factor];
    const double above = (f.hi - rule.threshold) / (f.hi - f.lo);
    const double positive = rule.greater ? above : 1.0 - above;
    if (positive < 0.2 || positive > 0.8) {
      throw DataError("label rule '" + rule.name + "' positive rate " + std::to_string(positive) +
                      " outside [0.2, 0.8]");
    }
  }
}

std::vector<std::size_t> DatasetBundle::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> DatasetBundle::training_indices() const {
  auto out = indices(Split::labeled_train);
  const auto unl = indices(Split::unlabeled_train);
  out.insert(out.end(), unl.begin(), unl.end());
  return out;
}

std::uint8_t DatasetBundle::label(std::size_t row, std::size_t column) const {
  if (row >= size() || column >= label_count()) throw std::out_of_range("label index out of range");
  if (split[row] == Split::unlabeled_train) {
    throw HiddenLabelAccess("read of hidden label for unlabeled training sample " + std::to_string(row));
  }
  if (!label_known[row]) throw HiddenLabelAccess("label of sample " + std::to_string(row) + " is unknown");
  return labels_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(column));
}

Matrix<double> DatasetBundle::label_rows(std::span<const std::size_t> rows) const {
  Matrix<double> out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(label_count()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t l = 0; l < label_count(); ++l) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) = label(rows[r], l);
    }
  }
  return out;
}

Matrix<double> DatasetBundle::image_rows(std::span<const std::size_t> rows) const {
  Matrix<double> out(static_cast<Eigen::Index>(rows.size()), images.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = images.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

std::vector<double> render_image(const FactorSpec& spec, std::span<const double> factor_values, std::size_t width) {
  const double cx = factor_or(spec, factor_values, FactorKind::center_x, 0.5);
  const double cy = factor_or(spec, factor_values, FactorKind::center_y, 0.5);
  const double rx = factor_or(spec, factor_values, FactorKind::radius, 0.2);
  const double ry = rx * kEllipseAspect;
  const double intensity = factor_or(spec, factor_values, FactorKind::intensity, 1.0);
  const double gradient = factor_or(spec, factor_values, FactorKind::background, 0.0);
  const double w = static_cast<double>(width);

  std::vector<double> img(width * width);
  for (std::size_t i = 0; i < width; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      int inside = 0;
      for (int a = 0; a < kSupersample; ++a) {
        for (int b = 0; b < kSupersample; ++b) {
          const double u = (static_cast<double>(j) + (b + 0.5) / kSupersample) / w;
          const double v = (static_cast<double>(i) + (a + 0.5) / kSupersample) / w;
          const double du = (u - cx) / rx;
          const double dv = (v - cy) / ry;
          if (du * du + dv * dv <= 1.0) ++inside;
        }
      }
      const double coverage = static_cast<double>(inside) / (kSupersample * kSupersample);
      const double bg = gradient * (static_cast<double>(j) + 0.5) / w;
      img[i * width + j] = std::clamp(bg * (1.0 - coverage) + intensity * coverage, 0.0, 1.0);
    }
  }
  return img;
}

DatasetBundle generate_synthetic(const FactorSpec& spec, std::size_t n, std::size_t width, std::uint64_t seed) {
  spec.validate();
  if (width < 8) throw DataError("image width must be >= 8");
  if (n == 0) throw DataError("sample count must be positive");
  Rng rng(seed);
  const std::size_t F = spec.factors.size();
  const std::size_t L = spec.labels.size();

  DatasetBundle b;
  b.width = width;
  b.images.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width * width));
  b.factors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(F));
  LabelMatrix labels(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L));
  std::vector<double> f(F);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < F; ++k) {
      std::uniform_real_distribution<double> u(spec.factors[k].lo, spec.factors[k].hi);
      f[k] = u(rng);
      b.factors(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = f[k];
    }
    const auto img = render_image(spec, f, width);
    for (std::size_t p = 0; p < img.size(); ++p) b.images(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(p)) = img[p];
    for (std::size_t l = 0; l < L; ++l) {
      const auto& rule = spec.labels[l];
      const bool above = f[rule.factor] > rule.threshold;
      labels(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(l)) = (above == rule.greater) ? 1 : 0;
    }
  }
  b.set_labels(std::move(labels));
  b.label_known.assign(n, 1);
  b.split.assign(n, Split::unlabeled_train);
  for (const auto& rule : spec.labels) b.label_names.push_back(rule.name);
  return b;
}

DatasetBundle make_splits(DatasetBundle bundle, std::size_t k_per_label, std::size_t n_val, std::size_t n_test,
                          std::uint64_t seed) {
  const std::size_t N = bundle.size();
  const std::size_t L = bundle.label_count();
  const auto& labels = bundle.raw_labels();
  const bool has_exclude = bundle.split.size() == N;
  std::vector<Split> split(N, Split::unlabeled_train);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < N; ++i) {
    if (has_exclude && bundle.split[i] == Split::excluded) {
      split[i] = Split::excluded;
    } else if (bundle.label_known[i]) {
      candidates.push_back(i);
    }
  }
  Rng rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);

  auto positive = [&](std::size_t i, std::size_t l) {
    return labels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) != 0;
  };

  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> total_pos(L, 0);
  for (std::size_t i : candidates) {
    for (std::size_t l = 0; l < L; ++l) total_pos[l] += positive(i, l);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return total_pos[a] < total_pos[b]; });

  std::vector<bool> taken(N, false);
  std::vector<std::size_t> have(L, 0);
  if (k_per_label > 0) {
    for (std::size_t l : order) {
      for (std::size_t i : candidates) {
        if (have[l] >= k_per_label) break;
        if (taken[i] || !positive(i, l)) continue;
        taken[i] = true;
        split[i] = Split::labeled_train;
        for (std::size_t m = 0; m < L; ++m) have[m] += positive(i, m);
      }
      if (have[l] < k_per_label) {
        const std::string name = l < bundle.label_names.size() ? bundle.label_names[l] : std::to_string(l);
        throw DataError("insufficient positives for label '" + name + "': need " + std::to_string(k_per_label) +
                        ", found " + std::to_string(have[l]));
      }
    }
  }

  std::vector<std::size_t> rest;
  for (std::size_t i : candidates) {
    if (!taken[i]) rest.push_back(i);
  }
  if (rest.size() < n_val + n_test) {
    throw DataError("not enough labeled-capable samples for " + std::to_string(n_val) + " validation and " +
                    std::to_string(n_test) + " test samples");
  }
  for (std::size_t r = 0; r < n_val; ++r) split[rest[r]] = Split::validation;
  for (std::size_t r = n_val; r < n_val + n_test; ++r) split[rest[r]] = Split::test;

  for (Split s : {Split::validation, Split::test}) {
    for (std::size_t l = 0; l < L && (s == Split::validation ? n_val : n_test) > 0; ++l) {
      std::size_t pos = 0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < N; ++i) {
        if (split[i] != s) continue;
        ++count;
        pos += positive(i, l);
      }
      if (pos == 0 || pos == count) {
        throw DataError("label column " + std::to_string(l) + " is single-class in the " +
                        (s == Split::validation ? "validation" : "test") + " split");
      }
    }
  }

  for (std::size_t i = 0; i < N; ++i) {
    if (split[i] == Split::unlabeled_train) bundle.label_known[i] = 0;
  }
  bundle.split = std::move(split);
  return bundle;
}

std::vector<TensorEntry> bundle_entries(const DatasetBundle& b) {
  std::vector<TensorEntry> entries;
  const std::size_t N = b.size();
  entries.push_back(make_entry("images", Tensor<double>::from_matrix(b.images)));
  const auto& labels = b.raw_labels();
  std::vector<std::uint8_t> lab(labels.data(), labels.data() + labels.size());
  entries.push_back(TensorEntry{"labels", {N, b.label_count()}, std::move(lab)});
  entries.push_back(TensorEntry{"label_known", {N}, b.label_known});
  std::vector<std::uint8_t> split(N);
  for (std::size_t i = 0; i < N; ++i) split[i] = static_cast<std::uint8_t>(b.split[i]);
  entries.push_back(TensorEntry{"split", {N}, std::move(split)});
  if (b.factors.size() > 0) entries.push_back(make_entry("factors", Tensor<double>::from_matrix(b.factors)));
  std::string names;
  for (std::size_t l = 0; l < b.label_names.size(); ++l) names += (l ? "\n" : "") + b.label_names[l];
  entries.push_back(make_text_entry("label_names", names));
  return entries;
}

DatasetBundle bundle_from_entries(std::span<const TensorEntry> entries) {
  DatasetBundle b;
  const auto images = to_tensor<double>(find_entry(entries, "images"));
  if (images.rank() != 2) throw DataError("images entry must be rank 2");
  b.images = images.matrix();
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(b.pixel_count()))));
  if (side * side != b.pixel_count()) throw DataError("images are not square");
  b.width = side;
  const std::size_t N = b.size();

  const auto& lab = find_entry(entries, "labels");
  const auto* lab_bytes = std::get_if<std::vector<std::uint8_t>>(&lab.data);
  if (lab_bytes == nullptr || lab.shape.size() != 2 || lab.shape[0] != N) throw DataError("bad labels entry");
  LabelMatrix labels(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(lab.shape[1]));
  std::copy(lab_bytes->begin(), lab_bytes->end(), labels.data());
  b.set_labels(std::move(labels));

  const auto* known = std::get_if<std::vector<std::uint8_t>>(&find_entry(entries, "label_known").data);
  const auto* split = std::get_if<std::vector<std::uint8_t>>(&find_entry(entries, "split").data);
  if (known == nullptr || split == nullptr || known->size() != N || split->size() != N) {
    throw DataError("bad label_known/split entries");
  }
  b.label_known = *known;
  for (auto s : *split) {
    if (s > static_cast<std::uint8_t>(Split::excluded)) throw DataError("bad split code");
    b.split.push_back(static_cast<Split>(s));
  }
  if (const auto* f = try_find_entry(entries, "factors")) b.factors = to_tensor<double>(*f).matrix();
  if (const auto* names = try_find_entry(entries, "label_names")) {
    std::istringstream in(entry_text(*names));
    std::string line;
    while (std::getline(in, line)) b.label_names.push_back(line);
  }
  return b;
}

void save_bundle(const std::filesystem::path& path, const DatasetBundle& bundle) {
  save_tensor_file(path, bundle_entries(bundle));
}

DatasetBundle load_bundle(const std::filesystem::path& path) { return bundle_from_entries(load_tensor_file(path)); }

std::vector<double> resize_nearest(std::span<const double> image, std::size_t in_w, std::size_t in_h,
                                   std::size_t out_w) {
  if (image.size() != in_w * in_h) throw DataError("image size does not match its extents");
  std::vector<double> out(out_w * out_w);
  for (std::size_t i = 0; i < out_w; ++i) {
    const std::size_t si = std::min(in_h - 1, (i * in_h) / out_w);
    for (std::size_t j = 0; j < out_w; ++j) {
      const std::size_t sj = std::min(in_w - 1, (j * in_w) / out_w);
      out[i * out_w + j] = image[si * in_w + sj];
    }
  }
  return out;
}

DatasetBundle import_csv_manifest(const std::filesystem::path& manifest, std::size_t width) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest " + manifest.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty manifest " + manifest.string());
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "path") throw DataError("manifest header must start with 'path'");
  const bool has_exclude = header.back() == "exclude";
  const std::size_t L = header.size() - 1 - (has_exclude ? 1 : 0);
  if (L == 0) throw DataError("manifest declares no label columns");

  std::vector<std::vector<double>> images;
  std::vector<std::vector<std::uint8_t>> label_rows;
  DatasetBundle b;
  b.width = width;
  b.label_names.assign(header.begin() + 1, header.begin() + 1 + static_cast<std::ptrdiff_t>(L));
  const auto base = manifest.parent_path();
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    cells.resize(header.size());
    std::filesystem::path img_path(cells[0]);
    if (img_path.is_relative()) img_path = base / img_path;
    std::size_t w = 0;
    std::size_t h = 0;
    const auto raw = read_gray_image(img_path, w, h);
    images.push_back(resize_nearest(raw, w, h, width));
    std::vector<std::uint8_t> row(L, 0);
    bool known = true;
    for (std::size_t l = 0; l < L; ++l) {
      const auto& c = cells[1 + l];
      if (c.empty() || c == "-1") {
        known = false;
      } else if (c == "1" || c == "1.0") {
        row[l] = 1;
      } else if (c != "0" && c != "0.0") {
        throw DataError("label cell '" + c + "' is not 0, 1, -1 or empty");
      }
    }
    label_rows.push_back(row);
    b.label_known.push_back(known ? 1 : 0);
    const bool excluded = has_exclude && cells.back() == "1";
    b.split.push_back(excluded ? Split::excluded : Split::unlabeled_train);
  }
  if (images.empty()) throw DataError("manifest lists no images");
  const auto N = static_cast<Eigen::Index>(images.size());
  b.images.resize(N, static_cast<Eigen::Index>(width * width));
  LabelMatrix labels(N, static_cast<Eigen::Index>(L));
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index p = 0; p < b.images.cols(); ++p) b.images(i, p) = images[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
    for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(L); ++l) labels(i, l) = label_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
  }
  b.set_labels(std::move(labels));
  return b;
}

}  // namespace stackssl
