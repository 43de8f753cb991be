#include "lvsk/figure.hpp"

#include <charconv>
#include <fstream>

#include "lvsk/error.hpp"
#include "lvsk/matrix.hpp"
#include "lvsk/svd.hpp"

namespace lvsk {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  return {buf, std::to_chars(buf, buf + sizeof(buf), v).ptr};
}

SketchSpec spec_for(SketchFamily family, std::size_t d, const FigureOptions& o) {
  SketchSpec spec;
  spec.family = family;
  spec.eps = o.eps;
  spec.d = d;
  spec.seed = o.seed;
  spec.size_constant = o.size_constant;
  return spec;
}

FigurePanel panel(const std::string& scenario, const Matrix& a, const LeverageResult& truth,
                  SketchFamily family, bool truncated, const FigureOptions& o) {
  const auto spec = spec_for(family, a.cols(), o);
  const auto approx = truncated ? leverage_sketched_trunc(a, spec, o.sv_tol)
                                : leverage_sketched(a, spec);
  FigurePanel p;
  p.scenario = scenario;
  p.family = family;
  p.truncated = truncated;
  p.sv_tol = truncated ? o.sv_tol : 0.0;
  p.true_rank = truth.effective_rank;
  p.sketch_rank = approx.effective_rank;
  p.truth = truth.scores;
  p.approx = approx.scores;
  p.stats = compare_scores(p.truth, p.approx, 2.0 * o.eps);
  return p;
}

Matrix noisy_matrix(const FigureOptions& o) {
  return gen_synthetic({o.noise_n, o.noise_d, o.noise_rank, o.noise_sigma, o.seed});
}

}  // namespace

std::string_view to_string(FigureKind kind) {
  switch (kind) {
    case FigureKind::rank_full: return "rank_full";
    case FigureKind::rank_half: return "rank_half";
    case FigureKind::trunc_fix: return "trunc_fix";
    case FigureKind::spectrum: return "spectrum";
  }
  return "unknown";
}

FigureKind parse_figure_kind(std::string_view name) {
  if (name == "rank_full" || name == "rank-full") return FigureKind::rank_full;
  if (name == "rank_half" || name == "rank-half") return FigureKind::rank_half;
  if (name == "trunc_fix" || name == "trunc-fix") return FigureKind::trunc_fix;
  if (name == "spectrum") return FigureKind::spectrum;
  throw Error(ErrorKind::config, "unknown figure kind '" + std::string(name) + "'");
}

FigureOutput make_figure(FigureKind kind, const FigureOptions& o) {
  if (o.families.empty()) throw Error(ErrorKind::config, "figure needs at least one sketch family");
  FigureOutput fig;
  fig.kind = kind;
  fig.band = 2.0 * o.eps;

  switch (kind) {
    case FigureKind::rank_full: {
      const auto a = gen_synthetic({o.n, o.d, o.d, 0.0, o.seed});
      const auto truth = leverage_exact(a);
      for (auto f : o.families) fig.panels.push_back(panel("full_rank", a, truth, f, false, o));
      break;
    }
    case FigureKind::rank_half: {
      const auto a = gen_synthetic({o.n, o.d, std::max<std::size_t>(1, o.d / 2), 0.0, o.seed});
      const auto truth = leverage_exact(a);
      for (auto f : o.families) fig.panels.push_back(panel("rank_half", a, truth, f, false, o));
      break;
    }
    case FigureKind::trunc_fix: {
      {
        const auto a = gen_synthetic({o.n, o.d, std::max<std::size_t>(1, o.d / 2), 0.0, o.seed});
        const auto truth = leverage_exact(a, o.sv_tol);
        for (auto f : o.families) fig.panels.push_back(panel("rank_half", a, truth, f, true, o));
      }
      // The reference is the signal subspace: exact scores truncated at the same cutoff.
      const auto a = noisy_matrix(o);
      const auto truth = leverage_exact(a, o.sv_tol);
      for (auto f : o.families) {
        fig.panels.push_back(panel("low_rank_noise", a, truth, f, false, o));
        fig.panels.push_back(panel("low_rank_noise", a, truth, f, true, o));
      }
      break;
    }
    case FigureKind::spectrum: {
      const auto a = noisy_matrix(o);
      fig.spectrum.push_back({"A", right_factors(a).sigma});
      for (auto f : o.families) {
        const auto state = sketch_matrix(spec_for(f, a.cols(), o), a);
        fig.spectrum.push_back({std::string(to_string(f)), right_factors(state.value()).sigma});
      }
      break;
    }
  }
  return fig;
}

void write_figure_csv(const FigureOutput& fig, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  std::string text;
  if (fig.kind == FigureKind::spectrum) {
    text = "label,index,sigma\n";
    for (const auto& curve : fig.spectrum)
      for (std::size_t j = 0; j < curve.sigma.size(); ++j)
        text += curve.label + ',' + std::to_string(j) + ',' + fmt_double(curve.sigma[j]) + '\n';
  } else {
    text = "scenario,family,variant,index,true_score,approx_score\n";
    for (const auto& p : fig.panels) {
      const std::string prefix = p.scenario + ',' + std::string(to_string(p.family)) + ',' +
                                 (p.truncated ? "truncated" : "untruncated") + ',';
      for (std::size_t i = 0; i < p.truth.size(); ++i)
        text += prefix + std::to_string(i) + ',' + fmt_double(p.truth[i]) + ',' +
                fmt_double(p.approx[i]) + '\n';
    }
  }
  out << text;
  if (!out) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
}

nlohmann::json figure_summary(const FigureOutput& fig) {
  nlohmann::json j{{"kind", to_string(fig.kind)}, {"band", fig.band}};
  j["panels"] = nlohmann::json::array();
  for (const auto& p : fig.panels) {
    j["panels"].push_back({{"scenario", p.scenario},
                           {"family", to_string(p.family)},
                           {"variant", p.truncated ? "truncated" : "untruncated"},
                           {"sv_tol", p.sv_tol},
                           {"true_rank", p.true_rank},
                           {"sketch_rank", p.sketch_rank},
                           {"qualifying_rows", p.stats.qualifying},
                           {"fraction_within_band", p.stats.fraction_within()},
                           {"max_relative_error", p.stats.max_relative},
                           {"mean_relative_error", p.stats.mean_relative}});
  }
  j["spectrum"] = nlohmann::json::array();
  for (const auto& c : fig.spectrum) j["spectrum"].push_back({{"label", c.label}, {"sigma", c.sigma}});
  return j;
}

}  // namespace lvsk
