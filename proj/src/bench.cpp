#include "lvsk/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <tuple>

#include "lvsk/error.hpp"
#include "lvsk/leverage.hpp"
#include "lvsk/matrix.hpp"
#include "lvsk/sketch.hpp"

namespace lvsk {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  return {buf, std::to_chars(buf, buf + sizeof(buf), v).ptr};
}

std::vector<std::size_t> powers_of_two(std::initializer_list<int> exponents) {
  std::vector<std::size_t> out;
  for (int e : exponents) out.push_back(std::size_t{1} << e);
  return out;
}

double time_cell(const Matrix& a, const std::string& method, double eps,
                 const BenchScenario& scenario) {
  using Clock = std::chrono::steady_clock;
  if (method == "exact") {
    const auto start = Clock::now();
    const auto result = leverage_exact(a);
    return std::chrono::duration<double>(Clock::now() - start).count();
  }
  SketchSpec spec;
  spec.family = parse_sketch_family(method);
  spec.eps = eps;
  spec.d = a.cols();
  spec.seed = scenario.seed;
  spec.size_constant = scenario.size_constant;
  const auto start = Clock::now();
  const auto result = leverage_sketched_trunc(a, spec, scenario.sv_tol);
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void validate(const BenchScenario& scenario) {
  if (scenario.repeats < 1) throw Error(ErrorKind::config, "bench repeats must be >= 1");
  if (scenario.n_values.empty()) throw Error(ErrorKind::config, "bench needs at least one n");
  if (scenario.methods.empty()) throw Error(ErrorKind::config, "bench needs at least one method");
  if (scenario.eps_values.empty()) throw Error(ErrorKind::config, "bench needs at least one eps");
  if (scenario.d == 0) throw Error(ErrorKind::config, "bench d must be >= 1");
  if (scenario.rank > scenario.d) throw Error(ErrorKind::config, "bench rank exceeds d");
  for (const auto& m : scenario.methods)
    if (m != "exact") parse_sketch_family(m);
  for (double e : scenario.eps_values)
    if (!(e > 0.0 && e < 1.0)) throw Error(ErrorKind::config, "bench eps must lie in (0, 1)");
}

BenchScenario bench_preset(const std::string& name) {
  BenchScenario s;
  s.name = name;
  if (name == "table1") {
    s.n_values = powers_of_two({16, 18, 20, 22, 24});
    s.d = 50;
    s.methods = {"srht", "exact"};
    s.eps_values = {0.25};
  } else if (name == "table2") {
    s.n_values = powers_of_two({10, 14, 18});
    s.d = 16;
    s.methods = {"exact", "countsketch", "osnap"};
  } else if (name == "table3") {
    s.n_values = powers_of_two({10, 14, 18});
    s.d = 256;
    s.methods = {"exact", "countsketch", "osnap"};
  } else if (name == "table4") {
    s.n_values = powers_of_two({16});
    s.d = 4096;
    s.methods = {"exact", "osnap"};
  } else if (name == "smoke") {
    s.n_values = {1024};
    s.d = 16;
    s.methods = {"exact", "countsketch", "osnap", "srht"};
    s.repeats = 3;
  } else {
    throw Error(ErrorKind::config, "unknown bench preset '" + name + "'");
  }
  return s;
}

std::vector<BenchRecord> run_bench(const BenchScenario& scenario, const BenchProgress& progress) {
  validate(scenario);
  std::vector<BenchRecord> records;
  auto emit = [&](BenchRecord r) {
    if (progress) progress(r);
    records.push_back(std::move(r));
  };

  for (std::size_t n : scenario.n_values) {
    SyntheticSpec gen{n, scenario.d, scenario.rank == 0 ? scenario.d : scenario.rank,
                      scenario.noise_sigma, scenario.seed};
    Matrix a;
    std::string skip;
    try {
      a = gen_synthetic(gen);
    } catch (const Error& e) {
      skip = (e.kind() == ErrorKind::capacity ? "skipped: " : "error: ") + std::string(e.what());
    }
    for (const auto& method : scenario.methods) {
      for (double eps : scenario.eps_values) {
        for (std::size_t rep = 0; rep < scenario.repeats; ++rep) {
          BenchRecord r{n, scenario.d, method, method == "exact" ? 0.0 : eps, rep, 0.0, "ok"};
          if (!skip.empty()) {
            r.status = skip;
            emit(std::move(r));
            continue;
          }
          try {
            r.seconds = time_cell(a, method, eps, scenario);
          } catch (const Error& e) {
            r.status = (e.kind() == ErrorKind::capacity ? "skipped: " : "error: ") +
                       std::string(e.what());
          }
          emit(std::move(r));
          // A cell over the cap stays over the cap on every repeat.
          if (records.back().status != "ok") {
            for (std::size_t rest = rep + 1; rest < scenario.repeats; ++rest) {
              auto copy = records.back();
              copy.repeat = rest;
              emit(std::move(copy));
            }
            break;
          }
        }
        if (method == "exact") break;  // eps does not apply
      }
    }
  }
  return records;
}

std::vector<BenchSummary> summarize(const std::vector<BenchRecord>& records) {
  using Key = std::tuple<std::size_t, std::size_t, std::string, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<const BenchRecord*>> groups;
  for (const auto& r : records) {
    Key key{r.n, r.d, r.method, r.eps};
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<BenchSummary> out;
  for (const auto& key : order) {
    const auto& group = groups[key];
    BenchSummary s{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), 0.0, 0, "ok"};
    std::vector<double> times;
    for (const auto* r : group) {
      if (r->status == "ok") {
        times.push_back(r->seconds);
      } else {
        s.status = r->status;
      }
    }
    s.runs = times.size();
    if (!times.empty()) {
      std::sort(times.begin(), times.end());
      const auto mid = times.size() / 2;
      s.median_seconds = times.size() % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
      s.status = "ok";
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void write_bench_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "n,d,method,eps,repeat,seconds,status\n";
  for (const auto& r : records) {
    out << r.n << ',' << r.d << ',' << r.method << ',' << fmt_double(r.eps) << ',' << r.repeat
        << ',' << fmt_double(r.seconds) << ',' << csv_escape(r.status) << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
}

void write_summary_csv(const std::vector<BenchSummary>& summary, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "n,d,method,eps,median_seconds,runs,status\n";
  for (const auto& s : summary) {
    out << s.n << ',' << s.d << ',' << s.method << ',' << fmt_double(s.eps) << ','
        << fmt_double(s.median_seconds) << ',' << s.runs << ',' << csv_escape(s.status) << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
}

nlohmann::json to_json(const BenchScenario& s) {
  return {{"name", s.name},         {"n_values", s.n_values},
          {"d", s.d},               {"rank", s.rank == 0 ? s.d : s.rank},
          {"noise_sigma", s.noise_sigma}, {"methods", s.methods},
          {"eps_values", s.eps_values},   {"repeats", s.repeats},
          {"size_constant", s.size_constant}, {"sv_tol", s.sv_tol},
          {"seed", s.seed}};
}

}  // namespace lvsk
