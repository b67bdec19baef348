#include "closedtest/set_family.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace closedtest {

SetFamily::SetFamily(std::vector<HypothesisSet> sets, std::size_t m)
    : sets_(std::move(sets)), m_(m) {
    if (m_ > 64) throw ContractViolation("set families support at most 64 hypotheses");
    for (const auto& s : sets_)
        if (!s.empty() && s.indices().back() >= m_)
            throw ContractViolation("family member index out of range for m=" + std::to_string(m_));
    std::sort(sets_.begin(), sets_.end());

    if (!sets_.empty() && sets_.front().empty() && sets_.size() > 1)
        throw ContractViolation("the empty set can only be the sole member of a family");

    if (sets_.size() < 2) return;
    std::vector<std::uint64_t> ms;
    ms.reserve(sets_.size());
    for (const auto& s : sets_) ms.push_back(s.mask());
    // Canonical order puts smaller sets first, so only look backwards.
    for (std::size_t j = 0; j < ms.size(); ++j)
        for (std::size_t i = 0; i < j; ++i)
            if ((ms[i] & ms[j]) == ms[i])
                throw ContractViolation("family is not an antichain: " +
                                        std::to_string(i) + " is contained in member " +
                                        std::to_string(j));
}

SetFamily SetFamily::from_masks(std::vector<std::uint64_t> masks, std::size_t m) {
    std::vector<HypothesisSet> sets;
    sets.reserve(masks.size());
    for (auto mask : masks) sets.push_back(HypothesisSet::from_mask(mask));
    return SetFamily(std::move(sets), m);
}

std::vector<std::uint64_t> SetFamily::masks() const {
    std::vector<std::uint64_t> out;
    out.reserve(sets_.size());
    for (const auto& s : sets_) out.push_back(s.mask());
    return out;
}

// ---------------------------------------------------------------------------

std::string format_set(const HypothesisSet& set, std::span<const std::string> labels) {
    std::string out = "{";
    bool first = true;
    for (auto i : set) {
        if (!first) out += ',';
        out += i < labels.size() ? labels[i] : std::to_string(i);
        first = false;
    }
    out += '}';
    return out;
}

void write_family(std::ostream& out, const SetFamily& family, std::span<const std::string> labels) {
    for (const auto& s : family.sets()) {
        if (s.empty()) {
            out << "{}\n";
            continue;
        }
        bool first = true;
        for (auto i : s) {
            if (!first) out << ',';
            out << (i < labels.size() ? labels[i] : std::to_string(i));
            first = false;
        }
        out << '\n';
    }
}

void save_family(const std::filesystem::path& path, const SetFamily& family,
                 std::span<const std::string> labels) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_family(out, family, labels);
}

LabeledFamily read_family(std::istream& in, std::span<const std::string> universe) {
    LabeledFamily result;
    std::unordered_map<std::string, std::size_t> index;
    const bool fixed = !universe.empty();
    for (std::size_t i = 0; i < universe.size(); ++i) index.emplace(universe[i], i);
    result.labels.assign(universe.begin(), universe.end());

    std::vector<HypothesisSet> sets;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r");
        const std::string row = line.substr(b, e - b + 1);
        if (row == "{}") {
            sets.emplace_back();
            continue;
        }
        std::vector<std::size_t> ids;
        std::size_t pos = 0;
        while (pos <= row.size()) {
            auto next = row.find(',', pos);
            if (next == std::string::npos) next = row.size();
            auto token = row.substr(pos, next - pos);
            const auto tb = token.find_first_not_of(" \t");
            const auto te = token.find_last_not_of(" \t");
            if (tb == std::string::npos) throw ParseError("empty label in set", lineno);
            token = token.substr(tb, te - tb + 1);
            auto it = index.find(token);
            if (it == index.end()) {
                if (fixed) throw ValidationError("unknown label " + token, "family");
                it = index.emplace(token, result.labels.size()).first;
                result.labels.push_back(token);
            }
            ids.push_back(it->second);
            pos = next + 1;
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw ParseError("label repeated within a set", lineno);
        sets.emplace_back(std::move(ids));
    }
    try {
        result.family = SetFamily(std::move(sets), result.labels.size());
    } catch (const ContractViolation& e) {
        throw ValidationError(std::string("invalid family: ") + e.what(), "family");
    }
    return result;
}

LabeledFamily load_family(const std::filesystem::path& path, std::span<const std::string> universe) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open family file " + path.string(), "family");
    return read_family(in, universe);
}

}  // namespace closedtest
