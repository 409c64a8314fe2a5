#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lsc/combinatorics.hpp"

namespace lsc {

/// Identity of a permutation-generated vector system: the multiset of
/// non-zero base-vector entries. positive[i] / negative[i] give the
/// multiplicity of value +(i+1) / -(i+1). The permutohedron (base
/// n-1, n-2, ..., 0, centered) is a special case flagged separately.
struct DLabel {
    std::vector<int> positive;
    std::vector<int> negative;
    bool permutohedron = false;
    std::string display_name;

    /// Accepts "P" or a two-digit label "pq" meaning p copies of +1 and
    /// q copies of -1 (e.g. "11", "21", "22"). Richer labels are built
    /// directly via the fields.
    static DLabel parse(const std::string& text);

    /// Multiset of the full n-dimensional base vector, zeros included.
    /// For the permutohedron this is {0, 1, ..., n-1}, uncentered.
    MultisetSpec spec_for(int n) const;

    int total_nonzero() const;
    int max_multiplicity() const;

    bool operator==(const DLabel&) const = default;
};

struct ValidationReport {
    bool ok = false;
    int zeros = 0;
    int max_multiplicity = 0;
    std::string rule; // empty when ok
};

/// Zero-count rule: the base vector needs at least as many zeros as the
/// multiplicity of any single non-zero value. The permutohedron has all
/// multiplicities 1 and always passes for n >= 2.
ValidationReport validate_label(const DLabel& label, int n);

struct VectorSystem {
    DLabel label;
    int n = 0;
    BigCount n_vects;
    Coords base_vector;    // canonical ascending member, uncentered
    double vector_norm = 0.0; // member norm (centered coordinates for P)
    std::optional<double> mcs; // analytic closest-pair value when known
    bool centered = false;     // permutohedron members are shifted to zero sum
    std::optional<int> projected_dim; // n-1 when the zero-sum projection applies
    MultisetSpec spec;
};

/// Throws ConstructionError on a zero-rule violation unless
/// allow_rule_override is set (A_1-style systems remain constructible).
VectorSystem build_system(const DLabel& label, int n, bool allow_rule_override = false);

/// Smallest n passing validate_label with at least n_classes members.
int n_min(const DLabel& label, const BigCount& n_classes);

/// Closed-form closest-pair |cossim|: 0.5 (D=11), 2/3 (D=21), 3/4 (D=22),
/// 1 - 12/(n(n^2-1)) for the centered permutohedron. nullopt otherwise.
std::optional<double> mcs_analytic(const DLabel& label, int n);

struct BruteForceMcs {
    /// max |cossim| over distinct non-antipodal pairs; nullopt when every
    /// pair is antipodal (e.g. D=11 at n=2).
    std::optional<double> closest_pair;
    /// min |cossim| over all distinct pairs (the literal separation
    /// statistic, reported alongside for transparency).
    double literal_min_abs = 0.0;
};

/// Exhaustive pair scan over all members (centered coordinates for P).
/// Throws SizeError when n_vects exceeds `cap`.
BruteForceMcs mcs_bruteforce(const VectorSystem& system, std::int64_t cap = 20000);

/// Maps zero-sum vectors in m+1 coordinates onto a fixed orthonormal
/// basis of the zero-sum hyperplane (Helmert construction), yielding m
/// coordinates with the Gram matrix preserved. Throws Error when any
/// input coordinate sum deviates from 0 by more than 1e-9.
std::vector<std::vector<double>> project_hyperplane(
    const std::vector<std::vector<double>>& vectors);

struct TargetVector {
    BigCount index;
    std::vector<double> coords;
};

/// The index-th member as real coordinates: unranked, centered for P,
/// optionally projected to n-1 coordinates (zero-sum systems only), and
/// scaled to unit norm when `normalize` is set.
TargetVector vector_at(const VectorSystem& system, const BigCount& index,
                       bool normalize, bool project = false);

} // namespace lsc
