#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lsc/vector_systems.hpp"

namespace lsc {

enum class AssignStrategy { sequential, shuffled };

std::string to_string(AssignStrategy strategy);
AssignStrategy assign_strategy_from_string(const std::string& text);

/// Persistent class_id -> target-vector mapping. Rows are a cache: the
/// table is fully reconstructible from (system, n_classes, strategy, seed).
struct AssignmentTable {
    DLabel label;
    int n = 0;
    bool normalized = true;
    std::int64_t n_classes = 0;
    AssignStrategy strategy = AssignStrategy::sequential;
    std::uint64_t seed = 0;
    std::string generator = "mt19937_64-fisher-yates";

    std::vector<BigCount> member_index;            // per class, distinct
    std::vector<std::vector<double>> coords;       // per class, unit norm

    int dim() const { return coords.empty() ? n : static_cast<int>(coords[0].size()); }
};

/// Sequential: class i gets lexicographic member i. Shuffled: a seeded
/// Fisher-Yates permutation, over the full index range when the system is
/// small enough to materialize (n_vects <= 10^7), otherwise over the first
/// n_classes lexicographic indices. Throws CapacityError when
/// n_classes > n_vects.
AssignmentTable assign(const VectorSystem& system, std::int64_t n_classes,
                       AssignStrategy strategy, std::uint64_t seed = 0);

/// Nearest-target classification: argmax of cossim(embedding, target);
/// ties broken by lowest class_id. Throws DegenerateInputError on a zero
/// embedding and ShapeError on a dimension mismatch.
std::int64_t classify(std::span<const double> embedding, const AssignmentTable& table);

/// 64-bit FNV-1a over the canonical row serialization.
std::uint64_t table_checksum(const AssignmentTable& table);

/// Textual CSV with '#'-prefixed header lines; coordinates carry 17
/// significant digits so the roundtrip is lossless.
void save_table(const AssignmentTable& table, const std::filesystem::path& path);

/// Throws ParseError (with line number) on malformed input and
/// IntegrityError when the stored checksum does not match the rows.
AssignmentTable load_table(const std::filesystem::path& path);

} // namespace lsc
