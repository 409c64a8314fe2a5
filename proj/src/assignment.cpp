#include "lsc/assignment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace lsc {

namespace {

constexpr const char* kFormatTag = "# lsc-assignment v1";

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string row_string(std::int64_t class_id, const BigCount& index,
                       const std::vector<double>& coords) {
    std::ostringstream os;
    os << class_id << "," << index;
    for (double c : coords) os << "," << format_double(c);
    return os.str();
}

std::uint64_t fnv1a64(std::uint64_t hash, const std::string& text) {
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 1099511628211ULL;
    }
    return hash;
}

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;

// Full-range shuffles are materialized only below this member count;
// larger systems permute the first n_classes lexicographic indices.
constexpr std::int64_t kFullShuffleLimit = 10000000;

} // namespace

std::string to_string(AssignStrategy strategy) {
    return strategy == AssignStrategy::sequential ? "sequential" : "shuffled";
}

AssignStrategy assign_strategy_from_string(const std::string& text) {
    if (text == "sequential") return AssignStrategy::sequential;
    if (text == "shuffled") return AssignStrategy::shuffled;
    throw ConfigError("unknown assignment strategy '" + text + "'");
}

AssignmentTable assign(const VectorSystem& system, std::int64_t n_classes,
                       AssignStrategy strategy, std::uint64_t seed) {
    if (n_classes < 1)
        throw ConfigError("assign: n_classes must be >= 1");
    if (BigCount(n_classes) > system.n_vects) {
        std::ostringstream os;
        os << "assign: " << n_classes << " classes requested but V_" << system.n
           << "^" << system.label.display_name << " has only " << system.n_vects
           << " vectors";
        throw CapacityError(os.str());
    }

    AssignmentTable table;
    table.label = system.label;
    table.n = system.n;
    table.normalized = true;
    table.n_classes = n_classes;
    table.strategy = strategy;
    table.seed = seed;

    std::vector<std::int64_t> indices;
    if (strategy == AssignStrategy::sequential) {
        indices.resize(static_cast<std::size_t>(n_classes));
        std::iota(indices.begin(), indices.end(), 0);
    } else {
        if (system.n_vects <= kFullShuffleLimit) {
            indices.resize(static_cast<std::size_t>(system.n_vects));
        } else {
            indices.resize(static_cast<std::size_t>(n_classes));
        }
        std::iota(indices.begin(), indices.end(), 0);
        std::mt19937_64 gen(seed);
        for (std::size_t i = indices.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(gen() % (i + 1));
            std::swap(indices[i], indices[j]);
        }
        indices.resize(static_cast<std::size_t>(n_classes));
    }

    table.member_index.reserve(indices.size());
    table.coords.reserve(indices.size());
    for (std::int64_t idx : indices) {
        TargetVector tv = vector_at(system, BigCount(idx), /*normalize=*/true);
        table.member_index.push_back(std::move(tv.index));
        table.coords.push_back(std::move(tv.coords));
    }
    return table;
}

std::int64_t classify(std::span<const double> embedding, const AssignmentTable& table) {
    if (table.n_classes < 1)
        throw ConfigError("classify: empty assignment table");
    if (static_cast<int>(embedding.size()) != table.dim())
        throw ShapeError("classify: embedding dimension " +
                         std::to_string(embedding.size()) + " != table dimension " +
                         std::to_string(table.dim()));
    double norm_sq = 0.0;
    for (double x : embedding) norm_sq += x * x;
    if (norm_sq <= 1e-24)
        throw DegenerateInputError("classify: zero embedding");

    // Targets are unit norm, so the argmax of cossim is the argmax of the dot.
    std::int64_t best = 0;
    double best_dot = -std::numeric_limits<double>::infinity();
    for (std::int64_t c = 0; c < table.n_classes; ++c) {
        const auto& t = table.coords[static_cast<std::size_t>(c)];
        double dot = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k) dot += embedding[k] * t[k];
        if (dot > best_dot) {
            best_dot = dot;
            best = c;
        }
    }
    return best;
}

std::uint64_t table_checksum(const AssignmentTable& table) {
    std::uint64_t hash = kFnvOffset;
    for (std::int64_t c = 0; c < table.n_classes; ++c) {
        const auto i = static_cast<std::size_t>(c);
        hash = fnv1a64(hash, row_string(c, table.member_index[i], table.coords[i]));
        hash = fnv1a64(hash, "\n");
    }
    return hash;
}

void save_table(const AssignmentTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw Error("save_table: cannot open " + path.string() + " for writing");

    char checksum_hex[32];
    std::snprintf(checksum_hex, sizeof(checksum_hex), "%016llx",
                  static_cast<unsigned long long>(table_checksum(table)));

    out << kFormatTag << "\n";
    out << "# label " << table.label.display_name << "\n";
    out << "# n " << table.n << "\n";
    out << "# n_classes " << table.n_classes << "\n";
    out << "# strategy " << to_string(table.strategy) << "\n";
    out << "# seed " << table.seed << "\n";
    out << "# generator " << table.generator << "\n";
    out << "# normalized " << (table.normalized ? 1 : 0) << "\n";
    out << "# checksum " << checksum_hex << "\n";
    out << "class_id,member_index";
    for (int k = 0; k < table.dim(); ++k) out << ",c_" << k;
    out << "\n";
    for (std::int64_t c = 0; c < table.n_classes; ++c) {
        const auto i = static_cast<std::size_t>(c);
        out << row_string(c, table.member_index[i], table.coords[i]) << "\n";
    }
    if (!out)
        throw Error("save_table: write to " + path.string() + " failed");
}

AssignmentTable load_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("load_table: cannot open " + path.string());

    AssignmentTable table;
    std::string stored_checksum;
    std::string line;
    int line_no = 0;

    auto parse_fail = [&](const std::string& what) -> ParseError {
        return ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };

    if (!std::getline(in, line) || line != kFormatTag) {
        line_no = 1;
        throw parse_fail("missing format tag '" + std::string(kFormatTag) + "'");
    }
    line_no = 1;

    bool saw_column_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.starts_with("#")) {
            std::istringstream hs(line.substr(1));
            std::string key;
            hs >> key;
            if (key == "label") {
                std::string value;
                hs >> value;
                table.label = DLabel::parse(value);
            } else if (key == "n") {
                hs >> table.n;
            } else if (key == "n_classes") {
                hs >> table.n_classes;
            } else if (key == "strategy") {
                std::string value;
                hs >> value;
                table.strategy = assign_strategy_from_string(value);
            } else if (key == "seed") {
                hs >> table.seed;
            } else if (key == "generator") {
                hs >> table.generator;
            } else if (key == "normalized") {
                int flag = 1;
                hs >> flag;
                table.normalized = flag != 0;
            } else if (key == "checksum") {
                hs >> stored_checksum;
            } else {
                throw parse_fail("unknown header key '" + key + "'");
            }
            if (hs.fail()) throw parse_fail("malformed header line");
            continue;
        }
        if (!saw_column_header) {
            if (!line.starts_with("class_id,member_index"))
                throw parse_fail("expected column header, got '" + line + "'");
            saw_column_header = true;
            continue;
        }
        if (line.empty()) continue;

        std::istringstream rs(line);
        std::string field;
        if (!std::getline(rs, field, ','))
            throw parse_fail("empty row");
        std::int64_t class_id;
        try {
            class_id = std::stoll(field);
        } catch (const std::exception&) {
            throw parse_fail("bad class_id '" + field + "'");
        }
        if (class_id != static_cast<std::int64_t>(table.member_index.size()))
            throw parse_fail("class ids must be dense from 0, got " + field);
        if (!std::getline(rs, field, ','))
            throw parse_fail("missing member_index");
        BigCount index;
        try {
            index = BigCount(field);
        } catch (const std::exception&) {
            throw parse_fail("bad member_index '" + field + "'");
        }
        std::vector<double> coords;
        while (std::getline(rs, field, ',')) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(field, &used);
            } catch (const std::exception&) {
                throw parse_fail("bad coordinate '" + field + "'");
            }
            if (used != field.size())
                throw parse_fail("bad coordinate '" + field + "'");
            coords.push_back(value);
        }
        if (coords.empty())
            throw parse_fail("row has no coordinates");
        if (!table.coords.empty() && coords.size() != table.coords.back().size())
            throw parse_fail("inconsistent row width");
        table.member_index.push_back(std::move(index));
        table.coords.push_back(std::move(coords));
    }

    if (!saw_column_header)
        throw ParseError(path.string() + ": truncated file, no column header");
    if (stored_checksum.empty())
        throw ParseError(path.string() + ": missing checksum header");
    if (static_cast<std::int64_t>(table.member_index.size()) != table.n_classes)
        throw ParseError(path.string() + ": truncated file, header says " +
                         std::to_string(table.n_classes) + " classes but file has " +
                         std::to_string(table.member_index.size()) + " rows");
    if (!table.coords.empty() && static_cast<int>(table.coords[0].size()) > table.n)
        throw IntegrityError(path.string() + ": row width exceeds system dimension n=" +
                             std::to_string(table.n));

    char recomputed[32];
    std::snprintf(recomputed, sizeof(recomputed), "%016llx",
                  static_cast<unsigned long long>(table_checksum(table)));
    if (stored_checksum != recomputed)
        throw IntegrityError(path.string() + ": checksum mismatch (stored " +
                             stored_checksum + ", recomputed " + recomputed + ")");
    return table;
}

} // namespace lsc
