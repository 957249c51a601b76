#pragma once

#include "zvcv/samples.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace zvcv {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& text);

/// Contents of a sample archive. `grad_log_like` is present for SMC
/// snapshots, which need the likelihood gradient to re-temper particles.
struct SampleArchive {
    SampleSet samples;
    std::optional<Matrix> grad_log_like;
};

/// CSV with header `theta_1..theta_d,grad_1..grad_d,weight[,log_like,log_prior][,grad_like_1..grad_like_d]`.
void write_sample_csv(std::ostream& out, const SampleSet& s, const Matrix* grad_log_like = nullptr);
SampleArchive read_sample_csv(std::istream& in);

void write_sample_csv(const std::filesystem::path& path, const SampleSet& s,
                      const Matrix* grad_log_like = nullptr);
SampleArchive read_sample_csv(const std::filesystem::path& path);

/// Plain numeric CSV (optional header row) used for model data.
Matrix read_matrix_csv(const std::filesystem::path& path, bool has_header);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace zvcv
