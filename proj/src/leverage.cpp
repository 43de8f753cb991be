#include "lvsk/leverage.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/QR>

#include "lvsk/error.hpp"

namespace lvsk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_nonempty(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw Error(ErrorKind::dimension, "empty input matrix");
}

LeverageResult sketched_impl(const Matrix& a, const SketchSpec& spec,
                             std::optional<double> sv_tol) {
  require_nonempty(a);
  const auto start = Clock::now();
  const auto state = sketch_matrix(spec, a);
  auto factors = right_factors(state.value());
  if (sv_tol) {
    factors = truncate(factors, *sv_tol);
  } else {
    for (double s : factors.sigma)
      if (s == 0.0)
        throw Error(ErrorKind::singular, "sketch has an exactly zero singular value");
  }
  const BasisProjector projector(factors.vt, factors.sigma);

  LeverageResult out;
  out.scores = projector.scores(a);
  out.method = sv_tol ? LeverageMethod::sketch_trunc : LeverageMethod::sketch;
  out.effective_rank = factors.rank();
  out.eps = spec.eps;
  out.sv_tol = sv_tol.value_or(0.0);
  out.spec = spec;
  out.seconds = seconds_since(start);
  return out;
}

}  // namespace

std::string_view to_string(LeverageMethod method) {
  switch (method) {
    case LeverageMethod::exact: return "exact";
    case LeverageMethod::sketch: return "sketch";
    case LeverageMethod::sketch_trunc: return "sketch-trunc";
    case LeverageMethod::oracle: return "oracle";
  }
  return "unknown";
}

LeverageMethod parse_leverage_method(std::string_view name) {
  if (name == "exact") return LeverageMethod::exact;
  if (name == "sketch") return LeverageMethod::sketch;
  if (name == "sketch-trunc" || name == "sketch_trunc") return LeverageMethod::sketch_trunc;
  if (name == "oracle") return LeverageMethod::oracle;
  throw Error(ErrorKind::config, "unknown leverage method '" + std::string(name) + "'");
}

double LeverageResult::sum() const noexcept {
  double total = 0.0;
  for (double s : scores) total += s;
  return total;
}

LeverageResult leverage_exact(const Matrix& a, double tol) {
  require_nonempty(a);
  const auto start = Clock::now();
  const auto svd = thin_svd(a);
  const std::size_t kept = truncated_rank(svd.sigma, tol);

  LeverageResult out;
  out.scores.resize(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto u = svd.u.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < kept; ++j) s += u[j] * u[j];
    out.scores[i] = s;
  }
  out.method = LeverageMethod::exact;
  out.effective_rank = kept;
  out.sv_tol = tol;
  out.seconds = seconds_since(start);
  return out;
}

LeverageResult leverage_oracle(const Matrix& a) {
  require_nonempty(a);
  if (a.rows() > kOracleMaxRows) {
    throw Error(ErrorKind::capacity, "oracle forms an n x n projector; n = " +
                                         std::to_string(a.rows()) + " exceeds " +
                                         std::to_string(kOracleMaxRows));
  }
  check_capacity(bytes_for(a.rows(), a.rows(), sizeof(double)), "oracle projector");
  const auto start = Clock::now();

  const Eigen::MatrixXd dense = a.view();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(kOracleTol);
  cod.compute(dense);
  if (cod.rank() == 0) throw Error(ErrorKind::degenerate, "oracle input is the zero matrix");

  const Eigen::MatrixXd projector = dense * cod.pseudoInverse();

  LeverageResult out;
  out.scores.resize(a.rows());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < projector.rows(); ++i) {
    const double norm2 = projector.row(i).squaredNorm();
    // A projector is idempotent and symmetric, so H_ii = |H_i|^2.
    worst = std::max(worst, std::abs(projector(i, i) - norm2));
    out.scores[static_cast<std::size_t>(i)] = norm2;
  }
  if (worst > 1e-6)
    throw Error(ErrorKind::numeric, "oracle projector failed the idempotence self-check");
  out.method = LeverageMethod::oracle;
  out.effective_rank = static_cast<std::size_t>(cod.rank());
  out.sv_tol = kOracleTol;
  out.seconds = seconds_since(start);
  return out;
}

LeverageResult leverage_sketched(const Matrix& a, const SketchSpec& spec) {
  return sketched_impl(a, spec, std::nullopt);
}

LeverageResult leverage_sketched_trunc(const Matrix& a, const SketchSpec& spec, double sv_tol) {
  return sketched_impl(a, spec, sv_tol);
}

BasisProjector::BasisProjector(const Matrix& vt, std::span<const double> sigma)
    : cols_(vt.cols()), rank_(sigma.size()) {
  if (vt.rows() != rank_)
    throw Error(ErrorKind::dimension, "basis has mismatched singular vectors and values");
  weights_.resize(cols_ * rank_);
  for (std::size_t j = 0; j < rank_; ++j) {
    const double inv = 1.0 / sigma[j];
    for (std::size_t c = 0; c < cols_; ++c) weights_[c * rank_ + j] = vt(j, c) * inv;
  }
}

double BasisProjector::score(std::span<const double> row) const {
  thread_local std::vector<double> u;
  u.assign(rank_, 0.0);
  double* acc = u.data();
  for (std::size_t c = 0; c < cols_; ++c) {
    const double x = row[c];
    const double* w = weights_.data() + c * rank_;
    for (std::size_t j = 0; j < rank_; ++j) acc[j] += x * w[j];
  }
  double s = 0.0;
  for (std::size_t j = 0; j < rank_; ++j) s += acc[j] * acc[j];
  return s;
}

void BasisProjector::score_rows(const Matrix& a, std::size_t lo, std::size_t hi,
                                std::span<double> out) const {
  if (a.cols() != cols_) throw Error(ErrorKind::dimension, "row width differs from the basis");
  for (std::size_t i = lo; i < hi; ++i) out[i] = score(a.row(i));
}

std::vector<double> BasisProjector::scores(const Matrix& a) const {
  std::vector<double> out(a.rows());
  score_rows(a, 0, a.rows(), out);
  return out;
}

ErrorStats compare_scores(std::span<const double> truth, std::span<const double> approx,
                          double band, double floor) {
  if (truth.size() != approx.size())
    throw Error(ErrorKind::dimension, "score vectors differ in length");
  ErrorStats stats;
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < floor) continue;
    const double rel = std::abs(approx[i] - truth[i]) / truth[i];
    ++stats.qualifying;
    if (rel <= band) ++stats.within_band;
    stats.max_relative = std::max(stats.max_relative, rel);
    total += rel;
  }
  if (stats.qualifying > 0) stats.mean_relative = total / static_cast<double>(stats.qualifying);
  return stats;
}

nlohmann::json metadata(const LeverageResult& result) {
  nlohmann::json j{{"method", to_string(result.method)},
                   {"n", result.scores.size()},
                   {"effective_rank", result.effective_rank},
                   {"eps", result.eps},
                   {"sv_tol", result.sv_tol},
                   {"score_sum", result.sum()},
                   {"wall_seconds", result.seconds}};
  if (result.spec) {
    j["sketch"] = to_json(*result.spec);
    j["seed"] = result.spec->seed;
  }
  return j;
}

void write_scores_csv(const LeverageResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  std::string text = "index,score\n";
  char buf[64];
  for (std::size_t i = 0; i < result.scores.size(); ++i) {
    text += std::to_string(i);
    text.push_back(',');
    text.append(buf, std::to_chars(buf, buf + sizeof(buf), result.scores[i]).ptr);
    text.push_back('\n');
  }
  out << text;
  if (!out) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
}

std::vector<double> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::vector<double> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view field = line;
    if (auto comma = field.rfind(','); comma != std::string_view::npos)
      field = field.substr(comma + 1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorKind::parse, path.string() + ": bad score at line " + std::to_string(line_no));
    }
    if (!std::isfinite(v) || v < 0.0)
      throw Error(ErrorKind::parse, path.string() + ": score at line " + std::to_string(line_no) +
                                        " is negative or non-finite");
    scores.push_back(v);
  }
  if (scores.empty()) throw Error(ErrorKind::format, path.string() + ": no scores");
  return scores;
}

}  // namespace lvsk
