#pragma once

//
// Evaluation harness: reports, synthetic data, matrix files and sweeps.
//
// .lplr binary layout (little endian, no padding):
//   "LPLR" | u32 version = 1 | u64 rows | u64 cols | rows·cols binary64, row-major
//

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "factor.hpp"
#include "lpsvd.hpp"
#include "matcore.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace lplr {

// ---------------------------------------------------------------------------
// Reports

struct Iterations {
    std::uint64_t central = 0;
    std::uint64_t shallow = 0;
    std::uint64_t refine_rounds = 0;

    friend bool operator==(const Iterations&, const Iterations&) = default;
};

struct EvalReport {
    std::uint64_t n = 0;
    std::uint64_t d = 0;
    std::uint64_t k = 0;
    double p = 1.0;
    Method method = Method::LpDeterministic;
    double error_pp = 0.0;           // ‖A − A_k‖_{p,p}^p
    double error_l2_baseline = 0.0;  // same error for the truncated SVD
    double bound_lower = 0.0;        // informational only
    bool bound_lower_informational = true;
    double bound_upper = 0.0;        // with σ_{k+1}
    double bound_upper_sigma_k = 0.0;
    double bound_upper_alt = 0.0;    // randomized: the |1/p − 1/2| exponent variant
    double sandwich_lo = 0.0;
    double sandwich_hi = 0.0;
    double compression_rate = 0.0;
    Iterations iterations{};
    double wall_time_ms = 0.0;
    std::uint64_t seed = 0;
    bool transposed = false;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline void to_json(nlohmann::ordered_json& j, const Iterations& it)
{
    j = nlohmann::ordered_json{{"central", it.central}, {"shallow", it.shallow}, {"refine_rounds", it.refine_rounds}};
}

inline void from_json(const nlohmann::ordered_json& j, Iterations& it)
{
    j.at("central").get_to(it.central);
    j.at("shallow").get_to(it.shallow);
    j.at("refine_rounds").get_to(it.refine_rounds);
}

inline void to_json(nlohmann::ordered_json& j, const EvalReport& r)
{
    j = nlohmann::ordered_json{
        {"n", r.n},
        {"d", r.d},
        {"k", r.k},
        {"p", r.p},
        {"method", std::string(to_string(r.method))},
        {"error_pp", r.error_pp},
        {"error_l2_baseline", r.error_l2_baseline},
        {"bound_lower", r.bound_lower},
        {"bound_lower_informational", r.bound_lower_informational},
        {"bound_upper", r.bound_upper},
        {"bound_upper_sigma_k", r.bound_upper_sigma_k},
        {"bound_upper_alt", r.bound_upper_alt},
        {"sandwich_lo", r.sandwich_lo},
        {"sandwich_hi", r.sandwich_hi},
        {"compression_rate", r.compression_rate},
        {"iterations", r.iterations},
        {"wall_time_ms", r.wall_time_ms},
        {"seed", r.seed},
        {"transposed", r.transposed},
    };
}

inline void from_json(const nlohmann::ordered_json& j, EvalReport& r)
{
    j.at("n").get_to(r.n);
    j.at("d").get_to(r.d);
    j.at("k").get_to(r.k);
    j.at("p").get_to(r.p);
    r.method = method_from_string(j.at("method").get<std::string>());
    j.at("error_pp").get_to(r.error_pp);
    j.at("error_l2_baseline").get_to(r.error_l2_baseline);
    j.at("bound_lower").get_to(r.bound_lower);
    j.at("bound_lower_informational").get_to(r.bound_lower_informational);
    j.at("bound_upper").get_to(r.bound_upper);
    j.at("bound_upper_sigma_k").get_to(r.bound_upper_sigma_k);
    j.at("bound_upper_alt").get_to(r.bound_upper_alt);
    j.at("sandwich_lo").get_to(r.sandwich_lo);
    j.at("sandwich_hi").get_to(r.sandwich_hi);
    j.at("compression_rate").get_to(r.compression_rate);
    j.at("iterations").get_to(r.iterations);
    j.at("wall_time_ms").get_to(r.wall_time_ms);
    j.at("seed").get_to(r.seed);
    j.at("transposed").get_to(r.transposed);
}

inline std::string report_to_json(const EvalReport& r, int indent = 2)
{
    return nlohmann::ordered_json(r).dump(indent);
}

inline EvalReport report_from_json(const std::string& text)
{
    try {
        return nlohmann::ordered_json::parse(text).get<EvalReport>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("report JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Metrics

/// 1 − k(n+d)/(nd): the fraction of entries saved by storing n×k and k×d factors.
inline double compression_rate(std::uint64_t n, std::uint64_t d, std::uint64_t k)
{
    if (n == 0 || d == 0)
        throw Error(Errc::InvalidArgument, "empty shape");
    if (k < 1 || k >= std::min(n, d))
        throw Error(Errc::InvalidRank, "rank must lie in [1, min(n, d) - 1]");
    const double nd = static_cast<double>(n) * static_cast<double>(d);
    const double kept = static_cast<double>(k) * (static_cast<double>(n) + static_cast<double>(d));
    if (kept > nd)
        throw Error(Errc::NotCompressing, "k(n+d) exceeds nd: the factors are larger than the matrix");
    return 1.0 - kept / nd;
}

struct EvalOptions {
    std::size_t sandwich_samples = 1000;
    std::uint64_t seed = 0;
};

/// Errors, bounds and sandwich range of `approx` against A.
inline EvalReport evaluate(const DenseMatrix& a, const RankKApprox& approx, double p, const EvalOptions& opt = {})
{
    require_valid_p(p);
    const DenseMatrix ak = assemble(approx);
    if (ak.rows() != a.rows() || ak.cols() != a.cols())
        throw Error(Errc::ShapeMismatch, "approximation shape does not match A");
    const Oriented o = orient(a);
    const std::size_t n = o.a.rows(), d = o.a.cols();

    EvalReport r;
    r.n = n;
    r.d = d;
    r.k = approx.k;
    r.p = p;
    r.method = approx.method;
    r.transposed = approx.transposed;
    r.seed = opt.seed;
    r.error_pp = entrywise_pnorm_pow(a - ak, p);
    r.error_l2_baseline = approx.method == Method::L2Svd ? r.error_pp
                                                         : entrywise_pnorm_pow(a - assemble(l2_low_rank(a, approx.k)), p);
    const BoundPair b = error_bounds(approx.sigmas, approx.k, p, d, n, approx.method);
    r.bound_lower = b.lower;
    r.bound_lower_informational = b.lower_is_informational;
    r.bound_upper = b.upper;
    r.bound_upper_sigma_k = b.upper_sigma_k;
    r.bound_upper_alt = b.upper_alt_exponent;
    const SandwichRange s = sandwich_check(o.a, p, approx.basis.D, approx.basis.V, opt.sandwich_samples, opt.seed);
    r.sandwich_lo = s.lo;
    r.sandwich_hi = s.hi;
    try {
        r.compression_rate = compression_rate(n, d, approx.k);
    } catch (const Error& e) {
        if (e.code() != Errc::NotCompressing)
            throw;
        r.compression_rate = 1.0 - static_cast<double>(approx.k) * static_cast<double>(n + d) /
                                       (static_cast<double>(n) * static_cast<double>(d));
    }
    r.iterations = {approx.basis.iterations_central, approx.basis.iterations_shallow,
                    static_cast<std::uint64_t>(approx.basis.refine_rounds)};
    return r;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
    std::size_t n = 200;
    std::size_t d = 16;
    std::size_t k_true = 4;
    double outlier_fraction = 0.0;
    double noise_sigma = 0.01;
    double outlier_scale = 20.0;
    std::uint64_t seed = 0;
};

/// Rows on a random k_true-dimensional subspace plus Gaussian noise; a
/// ⌊outlier_fraction·n⌋ subset of rows is then multiplied by outlier_scale.
inline DenseMatrix generate_synthetic(const SyntheticSpec& s)
{
    if (s.n == 0 || s.d == 0 || s.k_true == 0 || s.k_true >= s.d)
        throw Error(Errc::InvalidArgument, "need n, d >= 1 and 1 <= k_true < d");
    if (!(s.outlier_fraction >= 0.0 && s.outlier_fraction < 1.0) || !(s.noise_sigma >= 0.0) ||
        !(s.outlier_scale >= 1.0))
        throw Error(Errc::InvalidArgument, "outlier_fraction in [0,1), noise_sigma >= 0, outlier_scale >= 1");

    CounterRng basis_rng(s.seed, 1), coef_rng(s.seed, 2), noise_rng(s.seed, 3), pick_rng(s.seed, 4);
    DenseMatrix g(s.d, s.k_true);
    for (auto& v : g.data())
        v = basis_rng.gaussian();
    const DenseMatrix q = qr(g).Q; // d×k_true orthonormal

    DenseMatrix a(s.n, s.d);
    Vector c(s.k_true);
    for (std::size_t i = 0; i < s.n; ++i) {
        for (auto& v : c)
            v = coef_rng.gaussian();
        for (std::size_t j = 0; j < s.d; ++j) {
            double v = 0.0;
            for (std::size_t t = 0; t < s.k_true; ++t)
                v += q(j, t) * c[t];
            a(i, j) = v + (s.noise_sigma > 0.0 ? s.noise_sigma * noise_rng.gaussian() : 0.0);
        }
    }

    const auto count = static_cast<std::size_t>(std::floor(s.outlier_fraction * static_cast<double>(s.n)));
    std::vector<std::size_t> idx(s.n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t t = 0; t < count; ++t) {
        std::swap(idx[t], idx[t + static_cast<std::size_t>(pick_rng.below(s.n - t))]);
        for (std::size_t j = 0; j < s.d; ++j)
            a(idx[t], j) *= s.outlier_scale;
    }
    return a;
}

// ---------------------------------------------------------------------------
// Matrix files

enum class MatrixFormat { Binary, Csv };

/// .csv → Csv, anything else → Binary.
inline MatrixFormat format_from_path(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".csv" ? MatrixFormat::Csv : MatrixFormat::Binary;
}

namespace detail {

template <class T>
void put_le(std::string& out, T v)
{
    auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bits.begin(), bits.end());
    out.append(reinterpret_cast<const char*>(bits.data()), bits.size());
}

template <class T>
T get_le(const std::string& in, std::size_t offset)
{
    std::array<unsigned char, sizeof(T)> bits;
    std::memcpy(bits.data(), in.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bits.begin(), bits.end());
    return std::bit_cast<T>(bits);
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::IoError, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(Errc::IoError, "write to '" + path.string() + "' failed");
}

} // namespace detail

inline constexpr std::uint32_t binary_format_version = 1;

inline std::string encode_binary(const DenseMatrix& a)
{
    std::string out = "LPLR";
    out.reserve(24 + 8 * a.size());
    detail::put_le<std::uint32_t>(out, binary_format_version);
    detail::put_le<std::uint64_t>(out, a.rows());
    detail::put_le<std::uint64_t>(out, a.cols());
    for (double v : a.data())
        detail::put_le<double>(out, v);
    return out;
}

inline DenseMatrix decode_binary(const std::string& bytes)
{
    constexpr std::size_t header = 4 + 4 + 8 + 8;
    if (bytes.size() < header)
        throw Error(Errc::ParseError, "binary matrix: header truncated at byte offset " + std::to_string(bytes.size()));
    if (bytes.compare(0, 4, "LPLR") != 0)
        throw Error(Errc::ParseError, "binary matrix: bad magic at byte offset 0");
    const auto version = detail::get_le<std::uint32_t>(bytes, 4);
    if (version != binary_format_version)
        throw Error(Errc::HeaderMismatch, "binary matrix: unsupported version " + std::to_string(version));
    const auto rows = detail::get_le<std::uint64_t>(bytes, 8);
    const auto cols = detail::get_le<std::uint64_t>(bytes, 16);
    if (rows == 0 || cols == 0 || rows > (std::uint64_t{1} << 40) / cols)
        throw Error(Errc::HeaderMismatch, "binary matrix: invalid dimensions in header");
    const std::uint64_t payload = bytes.size() - header;
    const std::uint64_t expected = rows * cols * 8;
    if (payload < expected)
        throw Error(Errc::ParseError, "binary matrix: payload truncated at byte offset " +
                                          std::to_string(header + payload - payload % 8) + " (expected " +
                                          std::to_string(header + expected) + " bytes)");
    if (payload > expected)
        throw Error(Errc::HeaderMismatch, "binary matrix: " + std::to_string(payload - expected) +
                                              " trailing bytes beyond the dimensions in the header");
    DenseMatrix a(rows, cols);
    auto out = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = detail::get_le<double>(bytes, header + 8 * i);
        if (!std::isfinite(v))
            throw Error(Errc::ParseError, "binary matrix: non-finite value at byte offset " +
                                              std::to_string(header + 8 * i));
        out[i] = v;
    }
    return a;
}

inline std::string encode_csv(const DenseMatrix& a)
{
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (j)
                out.push_back(',');
            const auto res = std::to_chars(buf, buf + sizeof buf, a(i, j), std::chars_format::general, 17);
            out.append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    return out;
}

inline DenseMatrix decode_csv(const std::string& text)
{
    std::vector<double> values;
    std::size_t cols = 0, rows = 0, line = 0, pos = 0;
    while (pos < text.size()) {
        ++line;
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos)
            end = text.size();
        std::string_view row(text.data() + pos, end - pos);
        if (!row.empty() && row.back() == '\r')
            row.remove_suffix(1);
        const std::size_t row_start = pos;
        pos = end + 1;
        if (row.empty())
            continue;
        std::size_t count = 0, col = 0;
        while (true) {
            std::size_t comma = row.find(',', col);
            std::string_view field = row.substr(col, comma == std::string_view::npos ? row.size() - col : comma - col);
            while (!field.empty() && field.front() == ' ')
                field.remove_prefix(1);
            while (!field.empty() && field.back() == ' ')
                field.remove_suffix(1);
            if (!field.empty() && field.front() == '+')
                field.remove_prefix(1);
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v))
                throw Error(Errc::ParseError, "csv: bad number at line " + std::to_string(line) + ", column " +
                                                  std::to_string(col + 1) + " (byte offset " +
                                                  std::to_string(row_start + col) + ")");
            values.push_back(v);
            ++count;
            if (comma == std::string_view::npos)
                break;
            col = comma + 1;
        }
        if (rows == 0)
            cols = count;
        else if (count != cols)
            throw Error(Errc::ParseError, "csv: line " + std::to_string(line) + " has " + std::to_string(count) +
                                              " fields, expected " + std::to_string(cols));
        ++rows;
    }
    if (rows == 0)
        throw Error(Errc::ParseError, "csv: no data");
    return DenseMatrix(rows, cols, std::move(values));
}

inline DenseMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format)
{
    const std::string bytes = detail::read_file(path);
    return format == MatrixFormat::Csv ? decode_csv(bytes) : decode_binary(bytes);
}

inline DenseMatrix load_matrix(const std::filesystem::path& path) { return load_matrix(path, format_from_path(path)); }

inline void store_matrix(const std::filesystem::path& path, MatrixFormat format, const DenseMatrix& a)
{
    detail::write_file(path, format == MatrixFormat::Csv ? encode_csv(a) : encode_binary(a));
}

inline void store_matrix(const std::filesystem::path& path, const DenseMatrix& a)
{
    store_matrix(path, format_from_path(path), a);
}

// ---------------------------------------------------------------------------
// Runs and sweeps

struct RunConfig {
    FactorConfig factor{};
    EvalOptions eval{};
};

/// The factorization a method truncates, in the oriented frame.
inline LpSvd factorize_basis(const DenseMatrix& oriented, double p, Method method, const FactorConfig& cfg)
{
    switch (method) {
    case Method::LpDeterministic:
        return lp_svd(oriented, p, cfg.deterministic);
    case Method::LpRandomized:
        return lp_svd_randomized(oriented, p, cfg.randomized);
    case Method::L2Svd: {
        SvdResult s = svd(oriented);
        LpSvd b;
        b.U = std::move(s.U);
        b.D = std::move(s.S);
        b.V = std::move(s.V);
        b.p = 2.0;
        b.distortion = 1.0;
        return b;
    }
    }
    throw Error(Errc::InvalidArgument, "unknown method");
}

struct SweepJob {
    double p = 1.0;
    Method method = Method::LpDeterministic;
};

/// Every (k, p, method) combination. Each (p, method) factorization is
/// computed once on a worker thread and truncated for every k; the merged
/// reports are ordered by (k, p, method) whatever the thread count.
inline std::vector<EvalReport> sweep(const DenseMatrix& a, const std::vector<std::size_t>& ks,
                                     const std::vector<double>& ps, const std::vector<Method>& methods,
                                     const RunConfig& cfg = {}, unsigned threads = 0)
{
    const Oriented o = orient(a);
    for (auto k : ks)
        detail::require_rank(k, o.a.cols());
    for (double p : ps)
        require_valid_p(p);

    std::vector<SweepJob> jobs;
    for (double p : ps)
        for (Method m : methods)
            jobs.push_back({p, m});

    std::vector<std::vector<EvalReport>> results(jobs.size());
    std::vector<std::exception_ptr> failures(jobs.size());
    std::size_t next = 0;
    std::mutex mu;
    auto worker = [&] {
        while (true) {
            std::size_t j;
            {
                std::lock_guard lock(mu);
                if (next == jobs.size())
                    return;
                j = next++;
            }
            try {
                const auto t0 = std::chrono::steady_clock::now();
                LpSvd basis = factorize_basis(o.a, jobs[j].p, jobs[j].method, cfg.factor);
                const double factor_ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                for (auto k : ks) {
                    const auto t1 = std::chrono::steady_clock::now();
                    RankKApprox ak = detail::truncate(basis, k, jobs[j].method, o.transposed);
                    EvalReport r = evaluate(a, ak, jobs[j].p, cfg.eval);
                    r.wall_time_ms = factor_ms + std::chrono::duration<double, std::milli>(
                                                     std::chrono::steady_clock::now() - t1)
                                                     .count();
                    results[j].push_back(r);
                }
            } catch (...) {
                failures[j] = std::current_exception();
            }
        }
    };
    const unsigned hw = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(hw, jobs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < count; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    for (auto& f : failures)
        if (f)
            std::rethrow_exception(f);

    std::vector<EvalReport> merged;
    for (auto& r : results)
        merged.insert(merged.end(), r.begin(), r.end());
    std::stable_sort(merged.begin(), merged.end(), [](const EvalReport& x, const EvalReport& y) {
        return std::tuple(x.k, x.p, static_cast<int>(x.method)) < std::tuple(y.k, y.p, static_cast<int>(y.method));
    });
    return merged;
}

} // namespace lplr
