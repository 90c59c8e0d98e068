#ifndef IWPGPE_IO_HPP_
#define IWPGPE_IO_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "iwpgpe/policy.hpp"
#include "iwpgpe/runner.hpp"

namespace iwpgpe {

inline constexpr const char* kCurveHeader =
    "iteration,mean_return,std_return,eval_return,baseline_b,mean_tau";

// CSV text of a curve: header line, then one row per iteration with
// 9 significant digits, LF line endings
std::string format_curve(const LearningCurve& curve);
LearningCurve parse_curve(const std::string& text);

// throw std::runtime_error naming the path on I/O failure
void write_curve(const LearningCurve& curve, const std::filesystem::path& path);
LearningCurve read_curve(const std::filesystem::path& path);

// per-iteration mean and std across seeds
void write_summary(const std::vector<SummaryRow>& rows,
                   const std::filesystem::path& path);

// One value per line, "eta <i> <value>" then "tau <i> <value>", printed
// with enough digits to round-trip exactly.
void write_final_policy(const HyperParams& rho,
                        const std::filesystem::path& path);
HyperParams read_final_policy(const std::filesystem::path& path);

// Run metadata. Every entry of `config` is a `key = value` line loadable
// by --config; the remaining fields are written as comment lines.
struct RunManifest {
  std::vector<std::pair<std::string, std::string>> config;
  std::string code_version;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;
};

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path);

// gnuplot script plotting the return columns of `csv_name` against the
// iteration; the script is meant to sit in the same directory as the CSV
std::string gnuplot_script(const std::string& csv_name,
                           const std::string& title);
void write_text(const std::string& text, const std::filesystem::path& path);

// ISO 8601 UTC timestamp of the current time
std::string utc_timestamp();

}  // namespace iwpgpe

#endif  // IWPGPE_IO_HPP_
