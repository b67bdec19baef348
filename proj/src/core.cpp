#include "closedtest/core.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace closedtest {

namespace {

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

}  // namespace

// ---------------------------------------------------------------------------

PValueStudy::PValueStudy(std::vector<std::string> labels, std::vector<double> pvalues)
    : labels_(std::move(labels)), pvalues_(std::move(pvalues)) {
    if (labels_.size() != pvalues_.size())
        throw ValidationError("labels and pvalues differ in length", "pvalues");
    if (pvalues_.empty()) throw ValidationError("study needs at least one hypothesis", "pvalues");
    index_.reserve(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const double p = pvalues_[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("p-value of " + labels_[i] + " outside [0,1]", "pvalues");
        if (labels_[i].empty()) throw ValidationError("empty label at row " + std::to_string(i + 1), "labels");
        if (!index_.emplace(labels_[i], i).second)
            throw ValidationError("duplicate label " + labels_[i], "labels");
    }
}

std::size_t PValueStudy::index_of(std::string_view label) const {
    const auto it = index_.find(std::string(label));
    if (it == index_.end()) throw ValidationError("unknown label " + std::string(label), "ids");
    return it->second;
}

// ---------------------------------------------------------------------------

HypothesisSet::HypothesisSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
        throw ContractViolation("hypothesis set contains a duplicate index");
}

HypothesisSet::HypothesisSet(std::vector<std::size_t> indices, std::size_t m)
    : HypothesisSet(std::move(indices)) {
    if (!indices_.empty() && indices_.back() >= m)
        throw ContractViolation("hypothesis index " + std::to_string(indices_.back()) +
                                " out of range for m=" + std::to_string(m));
}

HypothesisSet HypothesisSet::all(std::size_t m) {
    HypothesisSet s;
    s.indices_.resize(m);
    for (std::size_t i = 0; i < m; ++i) s.indices_[i] = i;
    return s;
}

HypothesisSet HypothesisSet::from_mask(std::uint64_t mask) {
    HypothesisSet s;
    while (mask) {
        s.indices_.push_back(static_cast<std::size_t>(std::countr_zero(mask)));
        mask &= mask - 1;
    }
    return s;
}

bool HypothesisSet::contains(std::size_t i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
}

std::uint64_t HypothesisSet::mask() const {
    std::uint64_t mask = 0;
    for (auto i : indices_) {
        if (i >= 64) throw ContractViolation("bitmask encoding needs indices below 64");
        mask |= std::uint64_t{1} << i;
    }
    return mask;
}

bool operator<(const HypothesisSet& a, const HypothesisSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.indices_ < b.indices_;
}

// ---------------------------------------------------------------------------

LocalTest parse_local_test(std::string_view name) {
    if (name == "simes" || name == "Simes") return LocalTest::Simes;
    if (name == "fisher" || name == "Fisher") return LocalTest::Fisher;
    throw ConfigError("unknown local test '" + std::string(name) + "' (expected simes|fisher)");
}

std::string_view to_string(LocalTest test) {
    return test == LocalTest::Simes ? "simes" : "fisher";
}

void validate_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("alpha must lie in (0,1), got " + format_double(alpha), "alpha");
}

void AnalysisConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (closure_cap > kHardClosureCap)
        throw ConfigError("closure_cap " + std::to_string(closure_cap) + " exceeds hard ceiling " +
                          std::to_string(kHardClosureCap));
}

// ---------------------------------------------------------------------------

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t x = mix64(seed) ^ mix64(stream_id + 0x9e3779b97f4a7c15ULL);
    for (auto& word : s_) {
        x += 0x9e3779b97f4a7c15ULL;
        word = mix64(x);
    }
}

std::uint64_t RngStream::next_u64() noexcept {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------

PValueStudy read_study(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    std::vector<std::string> labels;
    std::vector<double> pvalues;
    std::unordered_map<std::string, std::size_t> seen;

    while (std::getline(in, line)) {
        ++lineno;
        const auto row = trim(line);
        if (row.empty()) continue;
        if (!header_seen) {
            const auto comma = row.find(',');
            if (comma == std::string_view::npos || trim(row.substr(0, comma)) != "label" ||
                trim(row.substr(comma + 1)) != "p")
                throw ParseError("expected header 'label,p'", lineno);
            header_seen = true;
            continue;
        }
        const auto comma = row.find(',');
        if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos)
            throw ParseError("expected two fields 'label,p'", lineno);
        const auto label = trim(row.substr(0, comma));
        const auto ptext = trim(row.substr(comma + 1));
        if (label.empty()) throw ParseError("empty label", lineno);
        double p = 0.0;
        const auto [ptr, ec] = std::from_chars(ptext.data(), ptext.data() + ptext.size(), p);
        if (ec != std::errc{} || ptr != ptext.data() + ptext.size())
            throw ParseError("cannot parse p-value '" + std::string(ptext) + "'", lineno);
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("line " + std::to_string(lineno) + ": p-value of " +
                                      std::string(label) + " outside [0,1]",
                                  "p");
        if (!seen.emplace(std::string(label), lineno).second)
            throw ValidationError("line " + std::to_string(lineno) + ": duplicate label " +
                                      std::string(label),
                                  "label");
        labels.emplace_back(label);
        pvalues.push_back(p);
    }
    if (!header_seen) throw ParseError("missing header 'label,p'", lineno == 0 ? 1 : lineno);
    return PValueStudy(std::move(labels), std::move(pvalues));
}

PValueStudy load_study(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open study file " + path.string(), "study");
    return read_study(in);
}

void write_study(std::ostream& out, const PValueStudy& study) {
    out << "label,p\n";
    for (std::size_t i = 0; i < study.m(); ++i)
        out << study.label(i) << ',' << format_double(study.pvalue(i)) << '\n';
}

void save_study(const std::filesystem::path& path, const PValueStudy& study) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_study(out, study);
}

HypothesisSet parse_label_set(const PValueStudy& study, std::string_view csv_labels) {
    std::vector<std::size_t> ids;
    std::size_t pos = 0;
    while (pos <= csv_labels.size()) {
        auto next = csv_labels.find(',', pos);
        if (next == std::string_view::npos) next = csv_labels.size();
        const auto label = trim(csv_labels.substr(pos, next - pos));
        if (!label.empty()) ids.push_back(study.index_of(label));
        pos = next + 1;
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw ValidationError("label listed twice in set", "ids");
    return HypothesisSet(std::move(ids), study.m());
}

}  // namespace closedtest
