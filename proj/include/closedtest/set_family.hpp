#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "closedtest/core.hpp"

namespace closedtest {

/// An antichain of hypothesis sets over m hypotheses, kept in canonical order
/// (by size, then lexicographic). The empty set may appear only as the sole
/// member: that is the transversal family of the empty family.
class SetFamily {
public:
    SetFamily() = default;
    /// Validates range, canonicalizes order, and rejects non-antichains.
    SetFamily(std::vector<HypothesisSet> sets, std::size_t m);

    static SetFamily from_masks(std::vector<std::uint64_t> masks, std::size_t m);

    std::size_t m() const noexcept { return m_; }
    const std::vector<HypothesisSet>& sets() const noexcept { return sets_; }
    std::size_t size() const noexcept { return sets_.size(); }
    bool empty() const noexcept { return sets_.empty(); }

    std::vector<std::uint64_t> masks() const;

    /// Same members (m is not compared).
    bool same_sets(const SetFamily& other) const { return sets_ == other.sets_; }
    friend bool operator==(const SetFamily&, const SetFamily&) = default;

private:
    std::vector<HypothesisSet> sets_;
    std::size_t m_ = 0;
};

/// Text format: one set per line, comma-separated labels, canonical order.
/// The empty set is written as `{}`. Lines starting with '#' are comments.
void write_family(std::ostream& out, const SetFamily& family, std::span<const std::string> labels);
void save_family(const std::filesystem::path& path, const SetFamily& family,
                 std::span<const std::string> labels);

/// Parsed family plus the label universe it was resolved against.
struct LabeledFamily {
    SetFamily family;
    std::vector<std::string> labels;
};

/// Reads a family. When `universe` is non-empty labels resolve against it
/// (unknown labels are a ValidationError); otherwise the universe is built
/// from labels in order of first appearance.
LabeledFamily read_family(std::istream& in, std::span<const std::string> universe = {});
LabeledFamily load_family(const std::filesystem::path& path,
                          std::span<const std::string> universe = {});

std::string format_set(const HypothesisSet& set, std::span<const std::string> labels);

}  // namespace closedtest
