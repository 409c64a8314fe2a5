#include "lsc/vector_systems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace lsc {

DLabel DLabel::parse(const std::string& text) {
    DLabel label;
    label.display_name = text;
    if (text == "P" || text == "p") {
        label.permutohedron = true;
        label.display_name = "P";
        return label;
    }
    if (text.size() == 2 && std::isdigit(static_cast<unsigned char>(text[0])) &&
        std::isdigit(static_cast<unsigned char>(text[1])) && text[0] != '0' &&
        text[1] != '0') {
        label.positive = {text[0] - '0'};
        label.negative = {text[1] - '0'};
        return label;
    }
    throw ConstructionError("unrecognized D label '" + text +
                            "' (expected \"P\" or two non-zero digits like \"21\")");
}

int DLabel::total_nonzero() const {
    int total = 0;
    for (int m : positive) total += m;
    for (int m : negative) total += m;
    return total;
}

int DLabel::max_multiplicity() const {
    int max_m = 0;
    for (int m : positive) max_m = std::max(max_m, m);
    for (int m : negative) max_m = std::max(max_m, m);
    return max_m;
}

MultisetSpec DLabel::spec_for(int n) const {
    std::vector<MultisetSpec::Entry> entries;
    if (permutohedron) {
        if (n < 1) throw ConstructionError("permutohedron requires n >= 1");
        for (int v = 0; v < n; ++v)
            entries.push_back({v, 1});
        return MultisetSpec::make(std::move(entries));
    }
    const int nonzero = total_nonzero();
    if (n < nonzero) {
        std::ostringstream os;
        os << "label " << display_name << " needs at least " << nonzero
           << " coordinates, got n=" << n;
        throw ConstructionError(os.str());
    }
    for (std::size_t i = 0; i < positive.size(); ++i)
        if (positive[i] > 0)
            entries.push_back({static_cast<std::int64_t>(i) + 1, positive[i]});
    for (std::size_t i = 0; i < negative.size(); ++i)
        if (negative[i] > 0)
            entries.push_back({-(static_cast<std::int64_t>(i) + 1), negative[i]});
    if (n > nonzero)
        entries.push_back({0, n - nonzero});
    return MultisetSpec::make(std::move(entries));
}

ValidationReport validate_label(const DLabel& label, int n) {
    ValidationReport report;
    if (label.permutohedron) {
        report.zeros = 1;
        report.max_multiplicity = 1;
        if (n < 2) {
            report.rule = "permutohedron requires n >= 2";
            return report;
        }
        report.ok = true;
        return report;
    }
    report.max_multiplicity = label.max_multiplicity();
    report.zeros = n - label.total_nonzero();
    if (report.max_multiplicity == 0) {
        report.rule = "label has no non-zero entries";
        return report;
    }
    if (report.zeros < 0) {
        std::ostringstream os;
        os << "dimension n=" << n << " cannot hold " << label.total_nonzero()
           << " non-zero entries";
        report.rule = os.str();
        return report;
    }
    if (report.zeros < report.max_multiplicity) {
        std::ostringstream os;
        os << "zero-count rule violated: base vector has " << report.zeros
           << " zeros but needs at least as many zeros as the largest non-zero"
              " multiplicity ("
           << report.max_multiplicity << ")";
        report.rule = os.str();
        return report;
    }
    report.ok = true;
    return report;
}

VectorSystem build_system(const DLabel& label, int n, bool allow_rule_override) {
    const ValidationReport report = validate_label(label, n);
    if (!report.ok && !allow_rule_override)
        throw ConstructionError("cannot build V_" + std::to_string(n) + "^" +
                                label.display_name + ": " + report.rule);

    VectorSystem system;
    system.label = label;
    system.n = n;
    system.spec = label.spec_for(n);
    system.n_vects = count_permutations(system.spec);
    system.base_vector = system.spec.canonical_member();
    system.centered = label.permutohedron;
    system.mcs = mcs_analytic(label, n);

    if (label.permutohedron) {
        // Centered members (k - (n-1)/2) have norm^2 = n(n^2-1)/12.
        system.vector_norm =
            std::sqrt(static_cast<double>(n) *
                      (static_cast<double>(n) * n - 1.0) / 12.0);
    } else {
        double sq = 0.0;
        for (std::int64_t v : system.base_vector)
            sq += static_cast<double>(v) * static_cast<double>(v);
        system.vector_norm = std::sqrt(sq);
    }

    // Zero-sum systems live on a hyperplane and admit the (n)->(n-1)
    // orthonormal projection. For P this holds after centering.
    std::int64_t base_sum = 0;
    for (std::int64_t v : system.base_vector) base_sum += v;
    const bool zero_sum = label.permutohedron || base_sum == 0;
    if (zero_sum && n >= 2)
        system.projected_dim = n - 1;

    return system;
}

int n_min(const DLabel& label, const BigCount& n_classes) {
    if (n_classes < 1)
        throw ConfigError("n_min: n_classes must be >= 1");
    int n = label.permutohedron ? 2 : label.total_nonzero() + label.max_multiplicity();
    for (;; ++n) {
        if (!validate_label(label, n).ok) continue;
        if (count_permutations(label.spec_for(n)) >= n_classes)
            return n;
    }
}

std::optional<double> mcs_analytic(const DLabel& label, int n) {
    if (label.permutohedron) {
        if (n < 3) return std::nullopt; // only antipodal pairs below n=3
        const double nn = static_cast<double>(n);
        return 1.0 - 12.0 / (nn * (nn * nn - 1.0));
    }
    if (!validate_label(label, n).ok) return std::nullopt;
    if (label.positive == std::vector<int>{1} && label.negative == std::vector<int>{1})
        return 0.5;
    if (label.positive == std::vector<int>{2} && label.negative == std::vector<int>{1})
        return 2.0 / 3.0;
    if (label.positive == std::vector<int>{2} && label.negative == std::vector<int>{2})
        return 0.75;
    return std::nullopt;
}

BruteForceMcs mcs_bruteforce(const VectorSystem& system, std::int64_t cap) {
    if (system.n_vects > cap) {
        std::ostringstream os;
        os << "system has " << system.n_vects << " members, above the exhaustive cap "
           << cap << "; use the analytic mcs";
        throw SizeError(os.str());
    }

    const double center = system.centered ? (system.n - 1) / 2.0 : 0.0;
    std::vector<std::vector<double>> members;
    members.reserve(static_cast<std::size_t>(system.n_vects));
    std::optional<Coords> cursor = system.spec.canonical_member();
    while (cursor) {
        std::vector<double> v(cursor->size());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = static_cast<double>((*cursor)[i]) - center;
        members.push_back(std::move(v));
        cursor = next_permutation(system.spec, *cursor);
    }

    const double norm_sq = system.vector_norm * system.vector_norm;
    BruteForceMcs result;
    result.literal_min_abs = 1.0;
    double closest = -1.0;
    bool any_non_antipodal = false;
    for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < members[i].size(); ++k)
                dot += members[i][k] * members[j][k];
            const double cs = dot / norm_sq;
            result.literal_min_abs = std::min(result.literal_min_abs, std::fabs(cs));
            if (cs <= -1.0 + 1e-12) continue; // antipodal pairs excluded
            any_non_antipodal = true;
            closest = std::max(closest, std::fabs(cs));
        }
    }
    if (any_non_antipodal)
        result.closest_pair = closest;
    return result;
}

std::vector<std::vector<double>> project_hyperplane(
    const std::vector<std::vector<double>>& vectors) {
    std::vector<std::vector<double>> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) {
        if (v.empty()) throw Error("project_hyperplane: empty vector");
        double sum = 0.0;
        for (double x : v) sum += x;
        if (std::fabs(sum) > 1e-9) {
            std::ostringstream os;
            os << "project_hyperplane: coordinate sum " << sum << " is not zero";
            throw Error(os.str());
        }
        const std::size_t m = v.size() - 1;
        std::vector<double> y(m);
        double prefix = 0.0; // sum of v[0..k-1]
        for (std::size_t k = 1; k <= m; ++k) {
            prefix += v[k - 1];
            const double kk = static_cast<double>(k);
            y[k - 1] = (prefix - kk * v[k]) / std::sqrt(kk * (kk + 1.0));
        }
        out.push_back(std::move(y));
    }
    return out;
}

TargetVector vector_at(const VectorSystem& system, const BigCount& index,
                       bool normalize, bool project) {
    const Coords raw = unrank(system.spec, index);
    const double center = system.centered ? (system.n - 1) / 2.0 : 0.0;

    std::vector<double> coords(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        coords[i] = static_cast<double>(raw[i]) - center;

    if (project) {
        if (!system.projected_dim)
            throw Error("vector_at: system is not zero-sum, projection unavailable");
        coords = std::move(project_hyperplane({coords}).front());
    }
    if (normalize) {
        double sq = 0.0;
        for (double x : coords) sq += x * x;
        const double norm = std::sqrt(sq);
        if (norm > 0.0)
            for (double& x : coords) x /= norm;
    }
    return TargetVector{index, std::move(coords)};
}

} // namespace lsc
