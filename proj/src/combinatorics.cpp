#include "lsc/combinatorics.hpp"

#include <algorithm>
#include <sstream>

namespace lsc {

namespace {

std::string coords_to_string(const Coords& vec) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < vec.size(); ++i) {
        if (i) os << ",";
        os << vec[i];
    }
    os << ")";
    return os.str();
}

} // namespace

MultisetSpec MultisetSpec::make(std::vector<Entry> entries) {
    if (entries.empty())
        throw Error("MultisetSpec: at least one entry required");
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.value < b.value; });
    MultisetSpec spec;
    spec.length_ = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].multiplicity <= 0)
            throw Error("MultisetSpec: multiplicities must be positive");
        if (i > 0 && entries[i].value == entries[i - 1].value)
            throw Error("MultisetSpec: values must be pairwise distinct");
        spec.length_ += entries[i].multiplicity;
    }
    spec.entries_ = std::move(entries);
    return spec;
}

Coords MultisetSpec::canonical_member() const {
    Coords out;
    out.reserve(static_cast<std::size_t>(length_));
    for (const auto& e : entries_)
        out.insert(out.end(), static_cast<std::size_t>(e.multiplicity), e.value);
    return out;
}

bool MultisetSpec::contains(const Coords& vec) const {
    if (static_cast<int>(vec.size()) != length_) return false;
    Coords sorted = vec;
    std::sort(sorted.begin(), sorted.end());
    return sorted == canonical_member();
}

BigCount count_permutations(const MultisetSpec& spec) {
    BigCount result = 1;
    // Product of binomial factors: placing each entry's copies into the
    // remaining slots keeps intermediates small and exact.
    int placed = 0;
    for (const auto& e : spec.entries()) {
        for (int j = 1; j <= e.multiplicity; ++j) {
            ++placed;
            result = result * placed / j; // exact: running binomial
        }
    }
    return result;
}

Coords unrank(const MultisetSpec& spec, const BigCount& index) {
    const BigCount total = count_permutations(spec);
    if (index < 0 || index >= total) {
        std::ostringstream os;
        os << "unrank: index " << index << " out of range for count " << total;
        throw RangeError(os.str());
    }

    std::vector<MultisetSpec::Entry> remaining = spec.entries();
    BigCount count = total;   // permutations of the remaining multiset
    BigCount idx = index;
    const int total_length = spec.length();
    int length = total_length; // members still to place

    Coords out;
    out.reserve(static_cast<std::size_t>(total_length));
    for (int pos = 0; pos < total_length; ++pos) {
        for (auto& e : remaining) {
            if (e.multiplicity == 0) continue;
            // Permutations of the remainder once e.value is fixed here.
            BigCount with_v = count * e.multiplicity / length;
            if (idx < with_v) {
                out.push_back(e.value);
                count = with_v;
                --e.multiplicity;
                --length;
                break;
            }
            idx -= with_v;
        }
    }
    return out;
}

BigCount rank(const MultisetSpec& spec, const Coords& vec) {
    if (!spec.contains(vec))
        throw MembershipError("rank: " + coords_to_string(vec) +
                              " is not a member of the multiset");

    std::vector<MultisetSpec::Entry> remaining = spec.entries();
    BigCount count = count_permutations(spec);
    BigCount result = 0;
    int length = spec.length();

    for (std::int64_t v : vec) {
        for (auto& e : remaining) {
            if (e.multiplicity == 0) continue;
            BigCount with_v = count * e.multiplicity / length;
            if (e.value == v) {
                count = with_v;
                --e.multiplicity;
                --length;
                break;
            }
            result += with_v; // entries are ascending, so all smaller values pass first
        }
    }
    return result;
}

std::optional<Coords> next_permutation(const MultisetSpec& spec, const Coords& vec) {
    if (!spec.contains(vec))
        throw MembershipError("next_permutation: " + coords_to_string(vec) +
                              " is not a member of the multiset");
    Coords out = vec;
    if (!std::next_permutation(out.begin(), out.end()))
        return std::nullopt;
    return out;
}

} // namespace lsc
