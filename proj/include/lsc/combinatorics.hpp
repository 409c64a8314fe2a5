#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lsc/errors.hpp"

namespace lsc {

/// Exact unbounded count. Systems like P_383 have ~10^827 members, so all
/// counts and member indices use arbitrary precision end to end.
using BigCount = boost::multiprecision::cpp_int;

/// One coordinate sequence. Values stay exact integers inside this module;
/// floating point enters only at the vector_systems boundary.
using Coords = std::vector<std::int64_t>;

/// A multiset of scalar values given as (value, multiplicity) pairs.
/// Zeros are an explicit entry; multiplicities sum to the total length n.
class MultisetSpec {
  public:
    struct Entry {
        std::int64_t value;
        int multiplicity;
    };

    /// Canonicalizes (sorts ascending by value) and validates: distinct
    /// values, positive multiplicities, at least one entry.
    static MultisetSpec make(std::vector<Entry> entries);

    const std::vector<Entry>& entries() const { return entries_; }
    int length() const { return length_; }

    /// The ascending-sorted member, which is also unrank(0).
    Coords canonical_member() const;

    /// True iff `vec` is some permutation of this multiset.
    bool contains(const Coords& vec) const;

    bool operator==(const MultisetSpec& other) const = default;

  private:
    std::vector<Entry> entries_; // ascending by value
    int length_ = 0;
};

/// Number of unique permutations: n! / (m_1! m_2! ... m_k!), exact.
BigCount count_permutations(const MultisetSpec& spec);

/// The permutation at position `index` in ascending lexicographic order
/// (numeric comparison per coordinate). O(n * k) big-int operations.
/// Throws RangeError when index >= count_permutations(spec).
Coords unrank(const MultisetSpec& spec, const BigCount& index);

/// Inverse of unrank. Throws MembershipError for non-members.
BigCount rank(const MultisetSpec& spec, const Coords& vec);

/// Lexicographic successor, or nullopt when `vec` is the maximum.
/// Throws MembershipError for non-members.
std::optional<Coords> next_permutation(const MultisetSpec& spec, const Coords& vec);

} // namespace lsc
