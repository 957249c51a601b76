#include "zvcv/archive.hpp"

#include "zvcv/errors.hpp"

#include <charconv>
#include <limits>
#include <fstream>
#include <sstream>
#include <vector>

namespace zvcv {

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw IoError("failed to format number");
    return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
    std::size_t b = text.find_first_not_of(" \t\r");
    std::size_t e = text.find_last_not_of(" \t\r");
    if (b == std::string::npos) throw IoError("empty numeric field");
    const std::string t = text.substr(b, e - b + 1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        // from_chars rejects "inf"/"nan" spellings from other writers.
        if (t == "nan" || t == "NaN" || t == "NA") return std::numeric_limits<double>::quiet_NaN();
        throw IoError("invalid numeric field '" + t + "'");
    }
    return value;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    return s.substr(b);
}

}  // namespace

void write_sample_csv(std::ostream& out, const SampleSet& s, const Matrix* grad_log_like) {
    const Index d = s.dim();
    const bool extra = s.log_like().has_value() && s.log_prior().has_value();
    if (grad_log_like && (grad_log_like->rows() != s.count() || grad_log_like->cols() != d))
        throw InvalidInput("likelihood gradient shape mismatch");
    for (Index k = 0; k < d; ++k) out << "theta_" << k + 1 << ',';
    for (Index k = 0; k < d; ++k) out << "grad_" << k + 1 << ',';
    out << "weight";
    if (extra) out << ",log_like,log_prior";
    if (grad_log_like)
        for (Index k = 0; k < d; ++k) out << ",grad_like_" << k + 1;
    out << '\n';
    for (Index i = 0; i < s.count(); ++i) {
        for (Index k = 0; k < d; ++k) out << format_double(s.theta()(i, k)) << ',';
        for (Index k = 0; k < d; ++k) out << format_double(s.grad_log_target()(i, k)) << ',';
        out << format_double(s.weights()[i]);
        if (extra) out << ',' << format_double((*s.log_like())[i]) << ',' << format_double((*s.log_prior())[i]);
        if (grad_log_like)
            for (Index k = 0; k < d; ++k) out << ',' << format_double((*grad_log_like)(i, k));
        out << '\n';
    }
}

SampleArchive read_sample_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("sample archive is empty");
    std::vector<std::string> header = split(trim(line));
    for (auto& h : header) h = trim(h);

    Index d = 0;
    while (d < static_cast<Index>(header.size()) && header[static_cast<std::size_t>(d)] == "theta_" + std::to_string(d + 1)) ++d;
    if (d == 0) throw IoError("sample archive header lacks theta columns");
    std::size_t pos = static_cast<std::size_t>(d);
    for (Index k = 0; k < d; ++k, ++pos) {
        if (pos >= header.size() || header[pos] != "grad_" + std::to_string(k + 1))
            throw IoError("sample archive header: expected grad_" + std::to_string(k + 1));
    }
    if (pos >= header.size() || header[pos] != "weight") throw IoError("sample archive header: expected weight");
    ++pos;
    bool extra = false;
    if (pos < header.size() && header[pos] == "log_like") {
        if (pos + 1 >= header.size() || header[pos + 1] != "log_prior")
            throw IoError("sample archive header: log_like must be followed by log_prior");
        extra = true;
        pos += 2;
    }
    bool has_grad_like = false;
    if (pos < header.size()) {
        for (Index k = 0; k < d; ++k, ++pos) {
            if (pos >= header.size() || header[pos] != "grad_like_" + std::to_string(k + 1))
                throw IoError("sample archive header: unexpected column layout");
        }
        has_grad_like = true;
    }
    if (pos != header.size()) throw IoError("sample archive header: trailing columns");
    const std::size_t ncol = header.size();

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != ncol)
            throw IoError("sample archive line " + std::to_string(line_no) + ": expected " +
                          std::to_string(ncol) + " columns, found " + std::to_string(fields.size()));
        std::vector<double> row(ncol);
        for (std::size_t c = 0; c < ncol; ++c) row[c] = parse_double(fields[c]);
        rows.push_back(std::move(row));
    }
    const Index n = static_cast<Index>(rows.size());
    if (n == 0) throw IoError("sample archive has no rows");
    Matrix theta(n, d), grad(n, d), grad_like;
    Vector w(n), ll, lp;
    if (extra) {
        ll.resize(n);
        lp.resize(n);
    }
    if (has_grad_like) grad_like.resize(n, d);
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        std::size_t c = 0;
        for (Index k = 0; k < d; ++k) theta(i, k) = r[c++];
        for (Index k = 0; k < d; ++k) grad(i, k) = r[c++];
        w[i] = r[c++];
        if (extra) {
            ll[i] = r[c++];
            lp[i] = r[c++];
        }
        if (has_grad_like)
            for (Index k = 0; k < d; ++k) grad_like(i, k) = r[c++];
    }
    SampleArchive out{SampleSet(std::move(theta), std::move(grad), std::move(w),
                                extra ? std::optional<Vector>(ll) : std::nullopt,
                                extra ? std::optional<Vector>(lp) : std::nullopt),
                      std::nullopt};
    if (has_grad_like) out.grad_log_like = std::move(grad_like);
    return out;
}

void write_sample_csv(const std::filesystem::path& path, const SampleSet& s, const Matrix* grad_log_like) {
    std::ostringstream ss;
    write_sample_csv(ss, s, grad_log_like);
    write_text_file(path, ss.str());
}

SampleArchive read_sample_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sample archive " + path.string());
    return read_sample_csv(in);
}

Matrix read_matrix_csv(const std::filesystem::path& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (has_header && !std::getline(in, line)) throw IoError(path.string() + " is empty");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        auto fields = split(line);
        std::vector<double> row;
        for (auto& f : fields) row.push_back(parse_double(f));
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(path.string() + ": ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path.string() + " has no data rows");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << contents;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace zvcv
