#include "lvsk/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "lvsk/error.hpp"
#include "lvsk/fwht.hpp"
#include "lvsk/random.hpp"

namespace lvsk {

namespace {

// Streams carved out of spec.seed.
constexpr std::uint64_t kBucketStream = 0x100;
constexpr std::uint64_t kSignStream = 0x200;
constexpr std::uint64_t kDiagStream = 0x300;
constexpr std::uint64_t kSampleStream = 0x400;

// Two-sum accumulation: hi holds the running float sum, lo the exact
// rounding errors of every addition into hi.
inline void accumulate(double& hi, double& lo, double x) noexcept {
  const double s = hi + x;
  const double bp = s - hi;
  lo += (hi - (s - bp)) + (x - bp);
  hi = s;
}

// Rows-from-formula ceiling with a small relative slack, so that values like
// (10/0.1)^2 that land a few ulps above an integer do not round up.
std::size_t slack_ceil(double x) {
  return static_cast<std::size_t>(std::ceil(x * (1.0 - 1e-12)));
}

std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population,
                                                      std::size_t count, std::uint64_t seed) {
  // Floyd's algorithm over a bitmap; output ascending.
  Rng rng(seed);
  std::vector<bool> chosen(population, false);
  for (std::uint64_t j = population - count; j < population; ++j) {
    const auto t = rng.uniform_below(j + 1);
    if (chosen[t]) {
      chosen[j] = true;
    } else {
      chosen[t] = true;
    }
  }
  std::vector<std::uint64_t> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < population; ++i)
    if (chosen[i]) out.push_back(i);
  return out;
}

}  // namespace

std::string_view to_string(SketchFamily family) {
  switch (family) {
    case SketchFamily::countsketch: return "countsketch";
    case SketchFamily::osnap: return "osnap";
    case SketchFamily::srht: return "srht";
  }
  return "unknown";
}

SketchFamily parse_sketch_family(std::string_view name) {
  if (name == "countsketch") return SketchFamily::countsketch;
  if (name == "osnap") return SketchFamily::osnap;
  if (name == "srht") return SketchFamily::srht;
  throw Error(ErrorKind::config, "unknown sketch family '" + std::string(name) + "'");
}

void validate(const SketchSpec& spec) {
  if (!(spec.eps > 0.0 && spec.eps < 1.0))
    throw Error(ErrorKind::config, "eps must lie in (0, 1)");
  if (spec.d == 0) throw Error(ErrorKind::config, "sketch column count d must be >= 1");
  if (!(spec.size_constant > 0.0) || !std::isfinite(spec.size_constant))
    throw Error(ErrorKind::config, "sizing constant must be positive");
  if (spec.rows_override && *spec.rows_override == 0)
    throw Error(ErrorKind::config, "explicit sketch row count must be >= 1");
}

std::size_t sketch_sparsity(const SketchSpec& spec) {
  if (spec.family != SketchFamily::osnap) return 1;
  if (spec.osnap_s != 0) return spec.osnap_s;
  return std::max<std::size_t>(1, std::bit_width(spec.d - 1));  // ceil(log2 d)
}

std::size_t sketch_rows(const SketchSpec& spec) {
  validate(spec);
  if (spec.rows_override) return *spec.rows_override;
  const double d = static_cast<double>(spec.d);
  const double c = spec.size_constant;
  const double eps2 = spec.eps * spec.eps;
  switch (spec.family) {
    case SketchFamily::countsketch: {
      const double ratio = d / spec.eps;
      return std::max<std::size_t>(1, slack_ceil(c * ratio * ratio));
    }
    case SketchFamily::osnap:
      return std::max({std::size_t{1}, sketch_sparsity(spec),
                       slack_ceil(c * (d / eps2) * std::log(d))});
    case SketchFamily::srht:
      return std::bit_ceil(std::max<std::size_t>(1, slack_ceil(c * (d / eps2) * std::log(d))));
  }
  return 1;
}

nlohmann::json to_json(const SketchSpec& spec) {
  nlohmann::json j{{"family", to_string(spec.family)},
                   {"eps", spec.eps},
                   {"d", spec.d},
                   {"s", sketch_sparsity(spec)},
                   {"osnap_s", spec.osnap_s},
                   {"seed", spec.seed},
                   {"size_constant", spec.size_constant},
                   {"k", sketch_rows(spec)}};
  j["rows_override"] = spec.rows_override ? nlohmann::json(*spec.rows_override) : nlohmann::json();
  return j;
}

SketchSpec sketch_spec_from_json(const nlohmann::json& j) {
  try {
    SketchSpec spec;
    spec.family = parse_sketch_family(j.at("family").get<std::string>());
    spec.eps = j.at("eps").get<double>();
    spec.d = j.at("d").get<std::size_t>();
    spec.osnap_s = j.value("osnap_s", std::size_t{0});
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.size_constant = j.value("size_constant", 1.0);
    if (j.contains("rows_override") && !j["rows_override"].is_null())
      spec.rows_override = j["rows_override"].get<std::size_t>();
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("bad sketch spec JSON: ") + e.what());
  }
}

PairwiseHash::PairwiseHash(std::uint64_t seed) {
  Rng rng(seed);
  auto wide = [&rng] {
    const auto high = static_cast<unsigned __int128>(rng.next_u64());
    return (high << 64) | rng.next_u64();
  };
  mul_ = wide();
  add_ = wide();
}

SketchOperator::SketchOperator(const SketchSpec& spec, std::uint64_t n_total)
    : spec_(spec), n_total_(n_total) {
  k_ = sketch_rows(spec_);
  s_ = sketch_sparsity(spec_);
  switch (spec_.family) {
    case SketchFamily::countsketch:
      buckets_.emplace_back(derive_seed(spec_.seed, kBucketStream));
      signs_.emplace_back(derive_seed(spec_.seed, kSignStream));
      scale_ = 1.0;
      break;
    case SketchFamily::osnap:
      if (k_ < s_)
        throw Error(ErrorKind::config, "OSNAP needs at least s = " + std::to_string(s_) +
                                           " rows, got k = " + std::to_string(k_));
      for (std::size_t j = 0; j < s_; ++j) {
        buckets_.emplace_back(derive_seed(spec_.seed, kBucketStream + 1 + j));
        signs_.emplace_back(derive_seed(spec_.seed, kSignStream + 1 + j));
      }
      scale_ = 1.0 / std::sqrt(static_cast<double>(s_));
      break;
    case SketchFamily::srht: {
      if (n_total_ == 0) throw Error(ErrorKind::config, "SRHT needs the total row count n >= 1");
      padded_ = std::bit_ceil(n_total_);
      if (k_ > padded_) {
        throw Error(ErrorKind::config, "SRHT row count k = " + std::to_string(k_) +
                                           " exceeds the padded length " +
                                           std::to_string(padded_));
      }
      check_capacity(padded_ / 8, "SRHT row sampler");
      diag_ = PairwiseHash(derive_seed(spec_.seed, kDiagStream));
      sampled_ = sample_without_replacement(padded_, k_, derive_seed(spec_.seed, kSampleStream));
      // sqrt(m/k) * (1/sqrt(m)) for the normalized Hadamard matrix.
      scale_ = 1.0 / std::sqrt(static_cast<double>(k_));
      break;
    }
  }
}

Matrix SketchOperator::materialize() const {
  Matrix s(k_, n_total_);
  for (std::uint64_t i = 0; i < n_total_; ++i)
    for_each_in_column(i, [&](std::size_t r, double v) { s(r, i) += v; });
  return s;
}

SketchState::SketchState(std::shared_ptr<const SketchOperator> op) : op_(std::move(op)) {
  const auto count = bytes_for(op_->k(), op_->d());
  check_capacity(bytes_for(count, sizeof(double), 2), "sketch state");
  hi_.assign(op_->k() * op_->d(), 0.0);
  lo_.assign(op_->k() * op_->d(), 0.0);
}

SketchState::SketchState(const SketchSpec& spec, std::uint64_t n_total)
    : SketchState(std::make_shared<const SketchOperator>(spec, n_total)) {}

void SketchState::update(std::uint64_t row_index, std::span<const double> row) {
  const std::size_t d = op_->d();
  if (row.size() != d) {
    throw Error(ErrorKind::dimension, "row has " + std::to_string(row.size()) +
                                          " entries, sketch expects " + std::to_string(d));
  }
  if (row_index >= op_->n_total()) {
    throw Error(ErrorKind::dimension, "row index " + std::to_string(row_index) +
                                          " outside [0, " + std::to_string(op_->n_total()) + ")");
  }
  op_->for_each_in_column(row_index, [&](std::size_t r, double scale) {
    double* hi = hi_.data() + r * d;
    double* lo = lo_.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) accumulate(hi[j], lo[j], scale * row[j]);
  });
  ++rows_consumed_;
}

void SketchState::update_rows(const Matrix& block, std::uint64_t first_row) {
  for (std::size_t i = 0; i < block.rows(); ++i) update(first_row + i, block.row(i));
}

bool SketchState::compatible_with(const SketchState& other) const noexcept {
  return op_->spec() == other.op_->spec() && op_->n_total() == other.op_->n_total();
}

void SketchState::merge_from(const SketchState& other) {
  if (!compatible_with(other)) {
    throw Error(ErrorKind::incompatible,
                "cannot merge sketches built from different specs or row counts");
  }
  for (std::size_t e = 0; e < hi_.size(); ++e) {
    accumulate(hi_[e], lo_[e], other.hi_[e]);
    lo_[e] += other.lo_[e];
  }
  rows_consumed_ += other.rows_consumed_;
}

Matrix SketchState::value() const {
  std::vector<double> out(hi_.size());
  for (std::size_t e = 0; e < hi_.size(); ++e) out[e] = hi_[e] + lo_[e];
  return {op_->k(), op_->d(), std::move(out)};
}

SketchState SketchState::from_parts(const SketchSpec& spec, std::uint64_t n_total,
                                    std::uint64_t rows_consumed,
                                    std::span<const double> accum,
                                    std::span<const double> residual) {
  SketchState state(spec, n_total);
  if (accum.size() != state.hi_.size() || (!residual.empty() && residual.size() != accum.size()))
    throw Error(ErrorKind::dimension, "serialized sketch has the wrong shape");
  std::copy(accum.begin(), accum.end(), state.hi_.begin());
  if (!residual.empty()) std::copy(residual.begin(), residual.end(), state.lo_.begin());
  state.rows_consumed_ = rows_consumed;
  return state;
}

SketchState merge(const SketchState& a, const SketchState& b) {
  SketchState out = a;
  out.merge_from(b);
  return out;
}

SketchState srht_apply(const SketchSpec& spec, const Matrix& a) {
  if (spec.family != SketchFamily::srht)
    throw Error(ErrorKind::unsupported, "srht_apply called with a non-SRHT spec");
  if (a.cols() != spec.d) throw Error(ErrorKind::dimension, "matrix columns differ from spec.d");
  SketchState state(spec, a.rows());
  const auto& op = state.op();
  const std::uint64_t m = op.padded_rows();
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  check_capacity(bytes_for(m, d, sizeof(double)), "SRHT padded transform");

  const double scale = 1.0 / std::sqrt(static_cast<double>(op.k()));
  const auto sampled = op.sampled_rows();
  std::vector<double> signs(n);
  for (std::size_t i = 0; i < n; ++i) signs[i] = op.srht_sign(i);

  // Transform a block of columns at a time so A is read row-contiguously.
  constexpr std::size_t kBlock = 16;
  std::vector<double> buf(static_cast<std::size_t>(m) * std::min(kBlock, d));
  for (std::size_t j0 = 0; j0 < d; j0 += kBlock) {
    const std::size_t width = std::min(kBlock, d - j0);
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = a.row(i);
      for (std::size_t c = 0; c < width; ++c) buf[c * m + i] = signs[i] * row[j0 + c];
    }
    for (std::size_t c = 0; c < width; ++c) {
      std::span<double> column(buf.data() + c * m, m);
      fwht(column);
      for (std::size_t t = 0; t < sampled.size(); ++t)
        state.hi_[t * d + j0 + c] = scale * column[sampled[t]];
    }
  }
  state.rows_consumed_ = n;
  return state;
}

SketchState sketch_matrix(const SketchSpec& spec, const Matrix& a) {
  if (a.cols() != spec.d) {
    throw Error(ErrorKind::dimension, "matrix has " + std::to_string(a.cols()) +
                                          " columns, sketch spec has d = " +
                                          std::to_string(spec.d));
  }
  if (spec.family == SketchFamily::srht) return srht_apply(spec, a);
  SketchState state(spec, a.rows());
  state.update_rows(a, 0);
  return state;
}

nlohmann::json state_metadata(const SketchState& state) {
  auto j = to_json(state.spec());
  j["k"] = state.k();
  j["n_total"] = state.op().n_total();
  j["rows_consumed"] = state.rows_consumed();
  return j;
}

void save_state(const SketchState& state, const std::filesystem::path& path) {
  const std::vector<double> hi(state.accum().begin(), state.accum().end());
  const std::vector<double> lo(state.residual().begin(), state.residual().end());
  save_matrix(Matrix(state.k(), state.d(), hi), path, FileFormat::binary);
  auto residual_path = path;
  residual_path += ".residual.bin";
  save_matrix(Matrix(state.k(), state.d(), lo), residual_path, FileFormat::binary);

  auto meta = state_metadata(state);
  meta["residual_file"] = residual_path.filename().string();
  auto meta_path = path;
  meta_path += ".json";
  std::ofstream out(meta_path);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + meta_path.string() + "' for writing");
  out << meta.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "write to '" + meta_path.string() + "' failed");
}

SketchState load_state(const std::filesystem::path& path) {
  auto meta_path = path;
  meta_path += ".json";
  std::ifstream in(meta_path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + meta_path.string() + "'");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, meta_path.string() + ": " + e.what());
  }
  const auto spec = sketch_spec_from_json(meta);
  const auto n_total = meta.at("n_total").get<std::uint64_t>();
  const auto consumed = meta.at("rows_consumed").get<std::uint64_t>();

  const auto values = load_matrix(path, FileFormat::binary);
  Matrix residual;
  if (meta.contains("residual_file")) {
    const auto residual_path = path.parent_path() / meta["residual_file"].get<std::string>();
    if (std::filesystem::exists(residual_path))
      residual = load_matrix(residual_path, FileFormat::binary);
  }
  return SketchState::from_parts(spec, n_total, consumed, values.data(), residual.data());
}

}  // namespace lvsk
