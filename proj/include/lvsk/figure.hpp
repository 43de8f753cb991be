#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvsk/leverage.hpp"
#include "lvsk/sketch.hpp"

namespace lvsk {

/// rank_full    full column rank, uncorrected sketch scores vs exact
/// rank_half    column rank d/2, uncorrected sketch scores vs exact
/// trunc_fix    rank_half with truncation, plus low-rank-plus-noise data with
///              and without truncation
/// spectrum     singular values of the low-rank-plus-noise matrix and its sketches
enum class FigureKind { rank_full, rank_half, trunc_fix, spectrum };

std::string_view to_string(FigureKind kind);
FigureKind parse_figure_kind(std::string_view name);

struct FigureOptions {
  std::size_t n = 4096;
  std::size_t d = 10;
  double eps = 0.5;
  std::uint64_t seed = 7;
  std::vector<SketchFamily> families{SketchFamily::countsketch, SketchFamily::srht};
  double size_constant = 1.0;
  double sv_tol = 1e-3;
  // Low-rank-plus-noise scenario.
  std::size_t noise_n = 20000;
  std::size_t noise_d = 200;
  std::size_t noise_rank = 50;
  double noise_sigma = 1e-3;
};

/// One scatter panel: true vs approximate scores for one scenario and family.
struct FigurePanel {
  std::string scenario;  // full_rank, rank_half, low_rank_noise
  SketchFamily family = SketchFamily::countsketch;
  bool truncated = false;
  double sv_tol = 0.0;
  std::size_t true_rank = 0;
  std::size_t sketch_rank = 0;
  std::vector<double> truth;
  std::vector<double> approx;
  ErrorStats stats;
};

struct SpectrumCurve {
  std::string label;  // "A" or a sketch family name
  std::vector<double> sigma;
};

struct FigureOutput {
  FigureKind kind = FigureKind::rank_full;
  double band = 0.0;  // 2 * eps
  std::vector<FigurePanel> panels;
  std::vector<SpectrumCurve> spectrum;
};

FigureOutput make_figure(FigureKind kind, const FigureOptions& options);

/// Scatter kinds: scenario,family,variant,index,true_score,approx_score.
/// spectrum: label,index,sigma.
void write_figure_csv(const FigureOutput& fig, const std::filesystem::path& path);
nlohmann::json figure_summary(const FigureOutput& fig);

}  // namespace lvsk
