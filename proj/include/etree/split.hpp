#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "etree/dataset.hpp"
#include "etree/distances.hpp"
#include "etree/energy.hpp"
#include "etree/error.hpp"
#include "etree/expansion.hpp"
#include "etree/rng.hpp"

namespace etree {

// ------------------------------------------------------------------------
// Split rules. Every rule is self-contained: routing a new observation needs
// only the rule and the covariate column it applies to.
// ------------------------------------------------------------------------

struct NumericThreshold {
    int covariate = -1;
    double threshold = 0.0;  // route left iff x <= threshold
};

struct NominalSubset {
    int covariate = -1;
    std::vector<int> subset;  // sorted level codes; route left iff code in subset
};

struct ComponentThreshold {
    int covariate = -1;
    ExpansionMeta meta;
    int component = -1;      // 0-based index into the expansion
    double threshold = 0.0;  // route left iff component value <= threshold
};

struct MedoidObservation {
    std::vector<double> curve;  // functional covariate
    Matrix adjacency;           // graph covariate
};

struct MedoidPair {
    int covariate = -1;
    CovariateKind kind = CovariateKind::functional;  // selects the distance
    MedoidObservation c1, c2;                        // stored by value
    int c1_row = -1, c2_row = -1;                    // training rows, for display
};

using SplitRule = std::variant<NumericThreshold, NominalSubset, ComponentThreshold, MedoidPair>;

inline int rule_covariate(const SplitRule& rule) {
    return std::visit([](const auto& r) { return r.covariate; }, rule);
}

// ------------------------------------------------------------------------
// Candidate indicators
// ------------------------------------------------------------------------

// Indicator of Q = (-inf, q] over the node enumeration.
inline std::vector<std::uint8_t> candidate_indicator(std::span<const double> xs, double q) {
    std::vector<std::uint8_t> ind(xs.size());
    std::size_t ones = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        ind[k] = xs[k] <= q ? 1 : 0;
        ones += ind[k];
    }
    if (ones == 0 || ones == xs.size())
        throw DataError("candidate_indicator: trivial candidate set");
    return ind;
}

// Indicator of a level subset over the node enumeration.
inline std::vector<std::uint8_t> candidate_indicator(std::span<const int> codes,
                                                     std::span<const int> subset_sorted) {
    std::vector<std::uint8_t> ind(codes.size());
    std::size_t ones = 0;
    for (std::size_t k = 0; k < codes.size(); ++k) {
        ind[k] = std::binary_search(subset_sorted.begin(), subset_sorted.end(), codes[k]) ? 1 : 0;
        ones += ind[k];
    }
    if (ones == 0 || ones == codes.size())
        throw DataError("candidate_indicator: trivial candidate set");
    return ind;
}

namespace detail {

inline DistanceMatrix indicator_pairwise(std::span<const std::uint8_t> ind) {
    const int m = static_cast<int>(ind.size());
    DistanceMatrix d = DistanceMatrix::zeros(m);
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
            d.at(k, l) = ind[static_cast<std::size_t>(k)] == ind[static_cast<std::size_t>(l)] ? 0.0 : 1.0;
    return d;
}

// Best-candidate bookkeeping. Candidates are compared by p-value first; exact
// p ties (common once several candidates exhaust the permutation resolution
// 1/(B+1)) fall back to the larger statistic, then to enumeration order.
struct BestCandidate {
    bool found = false;
    double p_value = 2.0;
    double statistic = -1.0;
    int index = -1;

    bool offer(double p, double stat, int idx) {
        if (!found || p < p_value || (p == p_value && stat > statistic)) {
            found = true;
            p_value = p;
            statistic = stat;
            index = idx;
            return true;
        }
        return false;
    }
};

}  // namespace detail

// ------------------------------------------------------------------------
// Tested splits for traditional (and expanded) covariates
// ------------------------------------------------------------------------

struct NumericSplit {
    double threshold = 0.0;
    double p_value = 1.0;
};

// Enumerates the right-closed intervals at the node's sorted unique values
// and tests each indicator against the response. Candidates leaving either
// side below min_bucket are skipped. Candidate i draws from key.child(i).
inline std::optional<NumericSplit> best_numeric_split(std::span<const double> xs,
                                                      const DistanceMatrix& dy, int n_permutations,
                                                      StreamKey key, int min_bucket = 1) {
    std::vector<double> uniq(xs.begin(), xs.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 2) throw DataError("best_numeric_split: all values identical");

    detail::BestCandidate best;
    double best_threshold = 0.0;
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
        const double q = uniq[i];
        std::size_t left = 0;
        for (double x : xs) left += x <= q ? 1 : 0;
        if (static_cast<int>(left) < min_bucket ||
            static_cast<int>(xs.size() - left) < min_bucket)
            continue;
        const std::vector<std::uint8_t> ind = candidate_indicator(xs, q);
        const IndependenceTest t =
            energy_test(detail::indicator_pairwise(ind), dy, n_permutations, key.child(i));
        if (best.offer(t.p_value, t.statistic, static_cast<int>(i))) best_threshold = q;
    }
    if (!best.found) return std::nullopt;
    return NumericSplit{best_threshold, best.p_value};
}

struct NominalSplit {
    std::vector<int> subset;  // sorted level codes
    double p_value = 1.0;
};

// Enumerates the nonempty proper level subsets, deduplicated by complement:
// only subsets containing the lowest present level are kept. Candidate i
// draws from key.child(i).
inline std::optional<NominalSplit> best_nominal_split(std::span<const int> codes,
                                                      const DistanceMatrix& dy, int n_permutations,
                                                      StreamKey key, int min_bucket = 1,
                                                      int max_levels = 15) {
    std::set<int> present(codes.begin(), codes.end());
    const std::vector<int> levels(present.begin(), present.end());
    const int L = static_cast<int>(levels.size());
    if (L < 2) throw DataError("best_nominal_split: single level present");
    if (L > max_levels)
        throw DataError("best_nominal_split: " + std::to_string(L) + " levels exceed the limit of " +
                        std::to_string(max_levels));

    detail::BestCandidate best;
    std::vector<int> best_subset;
    const std::uint32_t n_masks = (1u << (L - 1)) - 1;  // lowest level always in
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
        std::vector<int> subset{levels[0]};
        for (int b = 0; b < L - 1; ++b)
            if (mask & (1u << b)) subset.push_back(levels[static_cast<std::size_t>(b) + 1]);
        std::size_t left = 0;
        for (int c : codes)
            left += std::binary_search(subset.begin(), subset.end(), c) ? 1 : 0;
        if (static_cast<int>(left) < min_bucket ||
            static_cast<int>(codes.size() - left) < min_bucket)
            continue;
        const std::vector<std::uint8_t> ind = candidate_indicator(codes, subset);
        const IndependenceTest t =
            energy_test(detail::indicator_pairwise(ind), dy, n_permutations, key.child(mask));
        if (best.offer(t.p_value, t.statistic, static_cast<int>(mask))) best_subset = subset;
    }
    if (!best.found) return std::nullopt;
    return NominalSplit{std::move(best_subset), best.p_value};
}

// ------------------------------------------------------------------------
// Feature-vector-extraction split for structured covariates
// ------------------------------------------------------------------------

struct FveSplit {
    int component = -1;
    double threshold = 0.0;
    double p_value = 1.0;
};

// Selects the most associated component by energy test (no stopping
// criterion), then runs the numeric split search on that component.
// Component tests draw from key.child(0).child(s), the threshold search from
// key.child(1).
inline std::optional<FveSplit> fve_split(const Matrix& components, const DistanceMatrix& dy,
                                         int n_permutations, StreamKey key, int min_bucket = 1) {
    const int m = components.rows();
    const int s_count = components.cols();
    if (s_count < 1 || m < 2) throw DataError("fve_split: empty component matrix");
    bool any_varying = false;
    for (int s = 0; s < s_count && !any_varying; ++s)
        for (int i = 1; i < m; ++i)
            if (components(i, s) != components(0, s)) {
                any_varying = true;
                break;
            }
    if (!any_varying) throw DataError("fve_split: all components constant");

    std::vector<IndependenceTest> tests(static_cast<std::size_t>(s_count));
    const StreamKey select_key = key.child(0);
    parallel_for(static_cast<std::size_t>(s_count), [&](std::size_t s) {
        std::vector<double> col(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) col[static_cast<std::size_t>(i)] = components(i, static_cast<int>(s));
        tests[s] = energy_test(numeric_pairwise(col), dy, n_permutations, select_key.child(s));
    });
    int best_s = 0;
    for (int s = 1; s < s_count; ++s)
        if (tests[static_cast<std::size_t>(s)].p_value < tests[static_cast<std::size_t>(best_s)].p_value)
            best_s = s;

    std::vector<double> col(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) col[static_cast<std::size_t>(i)] = components(i, best_s);
    std::vector<double> uniq(col);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 2) return std::nullopt;  // degenerate winner, nothing to split

    const std::optional<NumericSplit> split =
        best_numeric_split(col, dy, n_permutations, key.child(1), min_bucket);
    if (!split) return std::nullopt;
    return FveSplit{best_s, split->threshold, split->p_value};
}

// ------------------------------------------------------------------------
// PAM with k = 2 for clustering splits
// ------------------------------------------------------------------------

struct PamResult {
    int medoid1 = -1;  // lower index
    int medoid2 = -1;
    std::vector<std::uint8_t> assignment;  // 0 = medoid1's cluster, 1 = medoid2's
    double objective = 0.0;
};

namespace detail {

inline double pam_cost(const DistanceMatrix& d, int c1, int c2) {
    double cost = 0.0;
    for (int k = 0; k < d.m; ++k) cost += std::min(d(k, c1), d(k, c2));
    return cost;
}

}  // namespace detail

// PAM with k = 2: greedy BUILD seeding, then best-improvement SWAP until no
// single-medoid swap lowers the total within-cluster distance. Single swaps
// can stall at a non-global pair, so convergence is verified against the
// full pair space (O(m^3), affordable at two medoids) and the search resumes
// if a better pair exists. All ties resolve to the lowest index.
inline PamResult pam_two_medoids(const DistanceMatrix& d) {
    const int m = d.m;
    if (m < 2) throw DataError("pam_two_medoids: need at least 2 observations");
    bool any_positive = false;
    for (double v : d.d)
        if (v > 0.0) {
            any_positive = true;
            break;
        }
    if (!any_positive) throw DataError("pam_two_medoids: all pairwise distances zero");

    // BUILD: first medoid minimizes total distance; second minimizes the
    // resulting two-medoid cost.
    int c1 = 0;
    double best_total = std::numeric_limits<double>::infinity();
    for (int v = 0; v < m; ++v) {
        double total = 0.0;
        for (int l = 0; l < m; ++l) total += d(v, l);
        if (total < best_total) {
            best_total = total;
            c1 = v;
        }
    }
    int c2 = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int h = 0; h < m; ++h) {
        if (h == c1) continue;
        const double cost = detail::pam_cost(d, c1, h);
        if (cost < best_cost) {
            best_cost = cost;
            c2 = h;
        }
    }

    // SWAP: steepest descent over single-medoid replacements; on convergence
    // sweep every pair and resume if an improving one exists.
    double current = best_cost;
    for (;;) {
        int swap_medoid = -1, swap_with = -1;
        double swap_cost = current;
        for (int which = 0; which < 2; ++which) {
            const int keep = which == 0 ? c2 : c1;
            for (int h = 0; h < m; ++h) {
                if (h == c1 || h == c2) continue;
                const double cost = detail::pam_cost(d, keep, h);
                if (cost < swap_cost) {
                    swap_cost = cost;
                    swap_medoid = which;
                    swap_with = h;
                }
            }
        }
        if (swap_medoid >= 0) {
            if (swap_medoid == 0)
                c1 = swap_with;
            else
                c2 = swap_with;
            current = swap_cost;
            continue;
        }
        int pair1 = -1, pair2 = -1;
        double pair_cost = current;
        for (int a = 0; a < m; ++a)
            for (int b = a + 1; b < m; ++b) {
                const double cost = detail::pam_cost(d, a, b);
                if (cost < pair_cost) {
                    pair_cost = cost;
                    pair1 = a;
                    pair2 = b;
                }
            }
        if (pair1 < 0) break;
        c1 = pair1;
        c2 = pair2;
        current = pair_cost;
    }
    if (c1 > c2) std::swap(c1, c2);

    PamResult out;
    out.medoid1 = c1;
    out.medoid2 = c2;
    out.objective = current;
    out.assignment.resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        out.assignment[static_cast<std::size_t>(k)] = d(k, c1) <= d(k, c2) ? 0 : 1;
    return out;
}

// ------------------------------------------------------------------------
// Rule application
// ------------------------------------------------------------------------

enum class Side { left, right };

// Routes one observation of the rule's covariate. Deterministic; equidistant
// medoid cases go left.
inline Side apply_rule(const SplitRule& rule, const Covariate& cov, int row) {
    if (const auto* r = std::get_if<NumericThreshold>(&rule)) {
        if (cov.kind() != CovariateKind::numeric)
            throw SchemaError("apply_rule: rule expects a numeric covariate");
        return cov.numeric().values[static_cast<std::size_t>(row)] <= r->threshold ? Side::left
                                                                                   : Side::right;
    }
    if (const auto* r = std::get_if<NominalSubset>(&rule)) {
        if (cov.kind() != CovariateKind::nominal)
            throw SchemaError("apply_rule: rule expects a nominal covariate");
        const int code = cov.nominal().codes[static_cast<std::size_t>(row)];
        return std::binary_search(r->subset.begin(), r->subset.end(), code) ? Side::left
                                                                            : Side::right;
    }
    if (const auto* r = std::get_if<ComponentThreshold>(&rule)) {
        std::vector<double> comp;
        if (const auto* bs = std::get_if<BsplineMeta>(&r->meta)) {
            if (cov.kind() != CovariateKind::functional)
                throw SchemaError("apply_rule: rule expects a functional covariate");
            const FunctionalColumn& c = cov.functional();
            comp = bspline_expand_one(c.values.row_span(row), c.grid, *bs);
        } else if (std::get_if<KcoreMeta>(&r->meta)) {
            if (cov.kind() != CovariateKind::graph || cov.graph().kind != GraphKind::binary)
                throw SchemaError("apply_rule: rule expects a binary graph covariate");
            const std::vector<int> shells =
                k_core_shell_indices(cov.graph().adjacency[static_cast<std::size_t>(row)]);
            comp = shell_distribution(shells);
        } else {
            const auto& bins = std::get<ShellBinsMeta>(r->meta);
            if (cov.kind() != CovariateKind::graph || cov.graph().kind != GraphKind::weighted)
                throw SchemaError("apply_rule: rule expects a weighted graph covariate");
            const std::vector<double> shells =
                s_core_shell_values(cov.graph().adjacency[static_cast<std::size_t>(row)]);
            comp = shell_distribution(shells, bins.edges);
        }
        if (r->component < 0 || r->component >= static_cast<int>(comp.size()))
            throw SchemaError("apply_rule: component index out of range for this observation");
        return comp[static_cast<std::size_t>(r->component)] <= r->threshold ? Side::left
                                                                            : Side::right;
    }
    const auto& r = std::get<MedoidPair>(rule);
    if (cov.kind() != r.kind)
        throw SchemaError("apply_rule: medoid rule covariate kind mismatch");
    double d1 = 0.0, d2 = 0.0;
    if (r.kind == CovariateKind::functional) {
        const FunctionalColumn& c = cov.functional();
        d1 = dist_functional(c.values.row_span(row), r.c1.curve, c.grid);
        d2 = dist_functional(c.values.row_span(row), r.c2.curve, c.grid);
    } else if (r.kind == CovariateKind::graph) {
        const Matrix& a = cov.graph().adjacency[static_cast<std::size_t>(row)];
        d1 = dist_graph(a, r.c1.adjacency);
        d2 = dist_graph(a, r.c2.adjacency);
    } else {
        throw SchemaError("apply_rule: medoid rules apply to structured covariates only");
    }
    return d1 <= d2 ? Side::left : Side::right;
}

}  // namespace etree
