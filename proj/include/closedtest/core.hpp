#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace closedtest {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Input data that parses but violates a domain invariant (p outside [0,1],
/// duplicate label, unknown label, ...).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what, std::string field = {})
        : std::invalid_argument(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A caller broke a precondition (empty input to a local test, duplicate id, ...).
class ContractViolation : public std::logic_error {
    using std::logic_error::logic_error;
};

/// Invalid experiment/analysis configuration, or a request beyond a hard cap.
class ConfigError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Labeled p-values; hypothesis i is the i-th row of the input. Immutable.
class PValueStudy {
public:
    /// Validates: m >= 1, equal lengths, unique labels, every p in [0,1].
    PValueStudy(std::vector<std::string> labels, std::vector<double> pvalues);

    std::size_t m() const noexcept { return pvalues_.size(); }
    std::span<const double> pvalues() const noexcept { return pvalues_; }
    std::span<const std::string> labels() const noexcept { return labels_; }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    double pvalue(std::size_t i) const { return pvalues_.at(i); }

    /// Index of a label; throws ValidationError naming the label if absent.
    std::size_t index_of(std::string_view label) const;

private:
    std::vector<std::string> labels_;
    std::vector<double> pvalues_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Sorted, duplicate-free hypothesis indices. The empty set is allowed.
class HypothesisSet {
public:
    HypothesisSet() = default;
    /// Sorts and validates; duplicates are a ContractViolation.
    explicit HypothesisSet(std::vector<std::size_t> indices);
    /// As above, additionally checks every index < m.
    HypothesisSet(std::vector<std::size_t> indices, std::size_t m);

    static HypothesisSet all(std::size_t m);
    static HypothesisSet from_mask(std::uint64_t mask);

    std::span<const std::size_t> indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }

    bool contains(std::size_t i) const;
    /// Bitmask encoding; requires every index < 64.
    std::uint64_t mask() const;

    friend bool operator==(const HypothesisSet&, const HypothesisSet&) = default;
    /// Canonical order: by cardinality, then lexicographic on indices.
    friend bool operator<(const HypothesisSet& a, const HypothesisSet& b);

private:
    std::vector<std::size_t> indices_;
};

enum class LocalTest { Simes, Fisher };

LocalTest parse_local_test(std::string_view name);
std::string_view to_string(LocalTest test);

inline constexpr std::size_t kDefaultClosureCap = 20;
inline constexpr std::size_t kHardClosureCap = 25;
inline constexpr double kDefaultAlpha = 0.05;

struct AnalysisConfig {
    double alpha = kDefaultAlpha;
    LocalTest local_test = LocalTest::Simes;
    std::size_t closure_cap = kDefaultClosureCap;

    /// Throws ConfigError unless 0 < alpha < 1 and closure_cap <= 25.
    void validate() const;
};

/// Throws ValidationError("alpha ...") unless 0 < alpha < 1.
void validate_alpha(double alpha);

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer. Used to derive stream state from (seed, stream_id).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256** generator. The four state words are filled by a SplitMix64
/// sequence started at mix64(seed) ^ mix64(stream_id + golden) so distinct
/// stream ids give unrelated states. Output is identical on every platform.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }
    result_type operator()() noexcept { return next_u64(); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t s_[4];
};

inline RngStream derive_stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    return RngStream(seed, stream_id);
}

// ---------------------------------------------------------------------------
// CSV I/O (`label,p`)
// ---------------------------------------------------------------------------

PValueStudy read_study(std::istream& in);
PValueStudy load_study(const std::filesystem::path& path);
void write_study(std::ostream& out, const PValueStudy& study);
void save_study(const std::filesystem::path& path, const PValueStudy& study);

/// Resolves comma-separated labels against a study. Empty text -> empty set.
HypothesisSet parse_label_set(const PValueStudy& study, std::string_view csv_labels);

/// Clamp used wherever a p-value enters a logarithm.
inline constexpr double kLogFloor = 1e-300;

}  // namespace closedtest
