#include "iwpgpe/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace iwpgpe {
namespace {

std::string g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("malformed " + std::string(what) + ": '" +
                             std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string format_curve(const LearningCurve& curve) {
  std::string out = kCurveHeader;
  out += '\n';
  for (const auto& r : curve.rows) {
    out += std::to_string(r.iteration);
    for (double v : {r.mean_return, r.std_return, r.eval_return, r.baseline_b,
                     r.mean_tau}) {
      out += ',';
      out += g9(v);
    }
    out += '\n';
  }
  return out;
}

LearningCurve parse_curve(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCurveHeader) {
    throw std::runtime_error("curve: missing or unexpected header");
  }
  LearningCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) {
      throw std::runtime_error("curve: expected 6 fields in '" + line + "'");
    }
    CurveRow r;
    r.iteration = static_cast<int>(parse_double(f[0], "iteration"));
    r.mean_return = parse_double(f[1], "mean_return");
    r.std_return = parse_double(f[2], "std_return");
    r.eval_return = parse_double(f[3], "eval_return");
    r.baseline_b = parse_double(f[4], "baseline_b");
    r.mean_tau = parse_double(f[5], "mean_tau");
    curve.rows.push_back(r);
  }
  return curve;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_curve(const LearningCurve& curve,
                 const std::filesystem::path& path) {
  write_text(format_curve(curve), path);
}

LearningCurve read_curve(const std::filesystem::path& path) {
  try {
    return parse_curve(slurp(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_summary(const std::vector<SummaryRow>& rows,
                   const std::filesystem::path& path) {
  std::string out = "iteration,mean,std\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + ',' + g9(r.mean) + ',' + g9(r.std) +
           '\n';
  }
  write_text(out, path);
}

void write_final_policy(const HyperParams& rho,
                        const std::filesystem::path& path) {
  std::string out;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    out += "eta " + std::to_string(i) + ' ' + g17(rho.eta[i]) + '\n';
  }
  for (std::size_t i = 0; i < rho.size(); ++i) {
    out += "tau " + std::to_string(i) + ' ' + g17(rho.tau[i]) + '\n';
  }
  write_text(out, path);
}

HyperParams read_final_policy(const std::filesystem::path& path) {
  std::istringstream in(slurp(path));
  std::vector<double> eta, tau;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ' ');
    if (f.size() != 3 || (f[0] != "eta" && f[0] != "tau")) {
      throw std::runtime_error(path.string() + ": malformed line '" + line +
                               "'");
    }
    auto& dst = f[0] == "eta" ? eta : tau;
    const auto idx = static_cast<std::size_t>(parse_double(f[1], "index"));
    if (idx != dst.size()) {
      throw std::runtime_error(path.string() + ": index out of order in '" +
                               line + "'");
    }
    dst.push_back(parse_double(f[2], "value"));
  }
  if (eta.empty() || eta.size() != tau.size()) {
    throw std::runtime_error(path.string() +
                             ": eta and tau must be non-empty and equal length");
  }
  return HyperParams(std::move(eta), std::move(tau));
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  std::string out;
  out += "# code_version = " + m.code_version + '\n';
  out += "# started = " + m.started + '\n';
  out += "# finished = " + m.finished + '\n';
  for (const auto& o : m.outputs) out += "# output = " + o + '\n';
  for (const auto& [k, v] : m.config) out += k + " = " + v + '\n';
  write_text(out, path);
}

std::string gnuplot_script(const std::string& csv_name,
                           const std::string& title) {
  std::string s;
  s += "set datafile separator ','\n";
  s += "set key autotitle columnhead\n";
  s += "set title '" + title + "'\n";
  s += "set xlabel 'number of updates'\n";
  s += "set ylabel 'cumulative reward'\n";
  s += "set grid\n";
  s += "plot '" + csv_name + "' using 1:2:3 with yerrorbars title 'batch mean', \\\n";
  s += "     '' using 1:4 with lines title 'mean policy'\n";
  return s;
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace iwpgpe
