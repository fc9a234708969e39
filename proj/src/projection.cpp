#include "clinproj/projection.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <limits>
#include <map>
#include <cmath>
#include <queue>
#include <thread>

namespace clinproj {

namespace {

struct Component {
    std::vector<int> vitals;
    std::vector<int> vars;               // flat var ids, ascending
    std::vector<LinearRow> cont_rows;    // continuous rows over this component
    std::vector<const IndicatorGroup*> groups;
    std::vector<int> binaries;           // ascending global ids
};

// Connected components of vitals coupled through rate, affine, or indicator
// rows. Vitals with no rows at all are grouped into the leading "free"
// component, solved by clamping.
std::vector<Component> decompose(const ConstraintSet& cs) {
    const int nv = cs.n_vitals;
    std::vector<int> parent(static_cast<std::size_t>(nv));
    for (int v = 0; v < nv; ++v) parent[static_cast<std::size_t>(v)] = v;
    std::function<int(int)> find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v) {
            parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
            v = parent[static_cast<std::size_t>(v)];
        }
        return v;
    };
    auto unite = [&](int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); };

    std::vector<bool> has_rows(static_cast<std::size_t>(nv), false);
    auto mark = [&](int var) { has_rows[static_cast<std::size_t>(var / cs.window_len)] = true; };
    auto link_terms = [&](const std::vector<std::pair<int, double>>& terms) {
        int first = -1;
        for (auto [var, c] : terms) {
            mark(var);
            int v = var / cs.window_len;
            if (first < 0)
                first = v;
            else
                unite(first, v);
        }
    };
    for (const auto& rb : cs.rates) has_rows[static_cast<std::size_t>(rb.vital)] = true;
    for (const auto& row : cs.linear) link_terms(row.terms);
    for (const auto& g : cs.indicators) {
        int first = -1;
        for (const auto& r : g.rows) {
            for (auto [var, c] : r.x_terms) {
                mark(var);
                int v = var / cs.window_len;
                if (first < 0)
                    first = v;
                else
                    unite(first, v);
            }
        }
    }

    std::vector<Component> comps;
    std::vector<int> comp_of(static_cast<std::size_t>(nv), -1);
    for (int v = 0; v < nv; ++v) {
        if (!has_rows[static_cast<std::size_t>(v)]) continue;
        int root = find(v);
        if (comp_of[static_cast<std::size_t>(root)] < 0) {
            comp_of[static_cast<std::size_t>(root)] = static_cast<int>(comps.size());
            comps.emplace_back();
        }
        Component& c = comps[static_cast<std::size_t>(comp_of[static_cast<std::size_t>(root)])];
        c.vitals.push_back(v);
        for (int t = 0; t < cs.window_len; ++t) c.vars.push_back(cs.var(v, t));
    }
    auto comp_idx = [&](int var) { return comp_of[static_cast<std::size_t>(find(var / cs.window_len))]; };
    for (const auto& rb : cs.rates) {
        int ci = comp_idx(cs.var(rb.vital, 0));
        int a = cs.var(rb.vital, rb.t - 1), b = cs.var(rb.vital, rb.t);
        std::string base = "rate[v" + std::to_string(rb.vital) + ",t" + std::to_string(rb.t) + "]";
        comps[static_cast<std::size_t>(ci)].cont_rows.push_back(LinearRow{{{b, 1.0}, {a, -1.0}}, rb.bound, base + "+"});
        comps[static_cast<std::size_t>(ci)].cont_rows.push_back(LinearRow{{{a, 1.0}, {b, -1.0}}, rb.bound, base + "-"});
    }
    for (const auto& row : cs.linear)
        comps[static_cast<std::size_t>(comp_idx(row.terms.front().first))].cont_rows.push_back(row);
    for (const auto& g : cs.indicators) {
        int ci = -1;
        for (const auto& r : g.rows)
            if (!r.x_terms.empty()) {
                ci = comp_idx(r.x_terms.front().first);
                break;
            }
        Component& c = comps[static_cast<std::size_t>(ci)];
        c.groups.push_back(&g);
        for (int b : g.binaries) c.binaries.push_back(b);
    }
    for (auto& c : comps) std::sort(c.binaries.begin(), c.binaries.end());
    return comps;
}

struct Node {
    std::vector<int8_t> fixed;  // per component binary, -1 = free
    double key = 0.0;           // lower bound inherited from the parent
    long seq = 0;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.key != b.key) return a.key > b.key;
        return a.seq > b.seq;
    }
};

class ComponentSolver {
public:
    ComponentSolver(const ConstraintSet& cs, const Component& comp, const Eigen::VectorXd& data,
                    const SolverOptions& opts)
        : cs_(cs), comp_(comp), data_(data), opts_(opts) {
        for (std::size_t k = 0; k < comp.binaries.size(); ++k)
            local_of_[comp.binaries[k]] = static_cast<int>(k);
    }

    // best incumbent over the component; fills x (full-length vector, only
    // component vars touched) and the component binary assignment
    struct Outcome {
        Eigen::VectorXd x;
        std::vector<int> assignment;  // per component binary
        double objective = 0.0;
        long nodes = 0;
        bool optimal = true;
        bool feasible = true;
    };

    Outcome solve(long budget) {
        Outcome out;
        const int nb = static_cast<int>(comp_.binaries.size());

        // greedy incumbent: assignment read off the clamped point if it
        // satisfies every group, else the witness side (always feasible)
        {
            Eigen::VectorXd xc = clamp_box(data_);
            std::vector<int> guess = read_assignment(xc);
            if (guess.empty()) guess = read_assignment(cs_.witness);
            QpResult qp = solve_with_assignment(guess);
            if (qp.feasible) {
                out.x = qp.x;
                out.assignment = guess;
                out.objective = qp.objective;
            } else {
                out.feasible = false;
                out.objective = std::numeric_limits<double>::infinity();
            }
        }

        std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
        long seq = 0;
        open.push(Node{std::vector<int8_t>(static_cast<std::size_t>(nb), int8_t{-1}), 0.0, seq++});

        while (!open.empty()) {
            if (out.nodes >= budget) {
                out.optimal = false;
                return out;
            }
            Node node = open.top();
            open.pop();
            if (out.feasible && node.key >= out.objective - opts_.gap_tol) break;

            ++out.nodes;
            std::vector<LinearRow> rows;
            if (!node_rows(node.fixed, rows)) continue;  // binary-infeasible
            QpResult qp = node_qp(rows);
            if (!qp.feasible) continue;
            double lb = qp.objective;
            if (out.feasible && lb >= out.objective - opts_.gap_tol) continue;

            int branch_group = pick_branch_group(node.fixed, qp.x);
            if (branch_group < 0) {
                // relaxation point satisfies every group: subtree solved
                std::vector<int> full = complete_assignment(node.fixed, qp.x);
                consider(out, qp.x, full, lb);
                continue;
            }
            int bvar = first_free_binary(*comp_.groups[static_cast<std::size_t>(branch_group)], node.fixed);
            for (int val : {0, 1}) {
                Node child = node;
                child.fixed[static_cast<std::size_t>(bvar)] = static_cast<int8_t>(val);
                child.key = lb;
                child.seq = seq++;
                open.push(child);
            }
        }
        return out;
    }

private:
    const ConstraintSet& cs_;
    const Component& comp_;
    const Eigen::VectorXd& data_;
    const SolverOptions& opts_;
    std::map<int, int> local_of_;  // global binary id -> component-local index

    Eigen::VectorXd clamp_box(const Eigen::VectorXd& v) const {
        return v.cwiseMax(cs_.box_lo).cwiseMin(cs_.box_hi);
    }

    // lex-smallest satisfying assignment per group at a fixed point, or empty
    std::vector<int> read_assignment(const Eigen::VectorXd& x) const {
        std::vector<int> values(comp_.binaries.size(), 0);
        for (const IndicatorGroup* g : comp_.groups) {
            std::vector<int> a = cs_.group_assignment(*g, x, 1e-12);
            if (a.empty()) return {};
            for (std::size_t j = 0; j < g->binaries.size(); ++j)
                values[static_cast<std::size_t>(local_of_.at(g->binaries[j]))] = a[j];
        }
        return values;
    }

    QpResult solve_with_assignment(const std::vector<int>& values) const {
        std::vector<LinearRow> rows = comp_.cont_rows;
        std::vector<int> global(static_cast<std::size_t>(cs_.n_binaries), 0);
        for (std::size_t k = 0; k < comp_.binaries.size(); ++k)
            global[static_cast<std::size_t>(comp_.binaries[k])] = values[k];
        for (const IndicatorGroup* g : comp_.groups) {
            for (const auto& r : g->rows) rows.push_back(r.substitute(global));
            for (const auto& r : g->binary_rows) {
                LinearRow s = r.substitute(global);
                if (0.0 > s.rhs + 1e-12) return QpResult{{}, 0.0, 0.0, false, {}};
            }
        }
        return node_qp(rows);
    }

    QpResult node_qp(const std::vector<LinearRow>& rows) const {
        return solve_node_qp(data_, cs_.box_lo, cs_.box_hi, rows, QpOptions{opts_.kkt_tol, 0});
    }

    // rows valid for every completion of the partial assignment; false when a
    // binary-only row is already unsatisfiable
    bool node_rows(const std::vector<int8_t>& fixed, std::vector<LinearRow>& rows) const {
        rows = comp_.cont_rows;
        for (const IndicatorGroup* g : comp_.groups) {
            for (const auto& r : g->rows) {
                bool all_fixed = true;
                double shift = 0.0;
                for (auto [b, gc] : r.z_terms) {
                    int8_t v = fixed[static_cast<std::size_t>(local_of_.at(b))];
                    if (v < 0) {
                        all_fixed = false;
                        break;
                    }
                    shift += gc * v;
                }
                if (all_fixed) rows.push_back(LinearRow{r.x_terms, r.rhs - shift, r.label});
            }
            for (const auto& r : g->binary_rows) {
                double min_lhs = 0.0;
                for (auto [b, gc] : r.z_terms) {
                    int8_t v = fixed[static_cast<std::size_t>(local_of_.at(b))];
                    if (v >= 0)
                        min_lhs += gc * v;
                    else if (gc < 0)
                        min_lhs += gc;  // free binary at its favorable value
                }
                if (min_lhs > r.rhs + 1e-12) return false;
            }
        }
        return true;
    }

    // group whose implication cannot be satisfied at x given the fixed
    // binaries; returns the most violated one, or -1 if all satisfiable
    int pick_branch_group(const std::vector<int8_t>& fixed, const Eigen::VectorXd& x) const {
        int best = -1;
        double worst = 1e-12;
        for (std::size_t gi = 0; gi < comp_.groups.size(); ++gi) {
            const IndicatorGroup& g = *comp_.groups[gi];
            bool any_free = false;
            for (int b : g.binaries)
                if (fixed[static_cast<std::size_t>(local_of_.at(b))] < 0) any_free = true;
            if (!any_free) continue;
            double v = group_violation(g, fixed, x);
            if (v > worst) {
                worst = v;
                best = static_cast<int>(gi);
            }
        }
        return best;
    }

    // min over consistent assignments of the worst row violation at x
    double group_violation(const IndicatorGroup& g, const std::vector<int8_t>& fixed,
                           const Eigen::VectorXd& x) const {
        const int nb = static_cast<int>(g.binaries.size());
        double best = std::numeric_limits<double>::infinity();
        for (int mask = 0; mask < (1 << nb); ++mask) {
            double worst = 0.0;
            bool consistent = true;
            std::vector<int> vals(static_cast<std::size_t>(nb));
            for (int j = 0; j < nb; ++j) {
                vals[static_cast<std::size_t>(j)] = (mask >> (nb - 1 - j)) & 1;
                int8_t f = fixed[static_cast<std::size_t>(local_of_.at(g.binaries[static_cast<std::size_t>(j)]))];
                if (f >= 0 && f != vals[static_cast<std::size_t>(j)]) consistent = false;
            }
            if (!consistent) continue;
            auto eval = [&](const MixedRow& r) {
                double lhs = 0.0;
                for (auto [var, c] : r.x_terms) lhs += c * x[var];
                for (std::size_t j = 0; j < r.z_terms.size(); ++j) {
                    auto [b, gc] = r.z_terms[j];
                    for (int k = 0; k < nb; ++k)
                        if (g.binaries[static_cast<std::size_t>(k)] == b) lhs += gc * vals[static_cast<std::size_t>(k)];
                }
                return lhs - r.rhs;
            };
            for (const auto& r : g.rows) worst = std::max(worst, eval(r));
            for (const auto& r : g.binary_rows) worst = std::max(worst, eval(r));
            best = std::min(best, worst);
        }
        return best;
    }

    int first_free_binary(const IndicatorGroup& g, const std::vector<int8_t>& fixed) const {
        for (int b : g.binaries) {
            int local = local_of_.at(b);
            if (fixed[static_cast<std::size_t>(local)] < 0) return local;
        }
        return -1;
    }

    std::vector<int> complete_assignment(const std::vector<int8_t>& fixed,
                                         const Eigen::VectorXd& x) const {
        std::vector<int> values(comp_.binaries.size(), 0);
        for (std::size_t k = 0; k < comp_.binaries.size(); ++k)
            if (fixed[k] >= 0) values[k] = fixed[k];
        for (const IndicatorGroup* g : comp_.groups) {
            const int nb = static_cast<int>(g->binaries.size());
            for (int mask = 0; mask < (1 << nb); ++mask) {
                std::vector<int> vals(static_cast<std::size_t>(nb));
                bool consistent = true;
                for (int j = 0; j < nb; ++j) {
                    vals[static_cast<std::size_t>(j)] = (mask >> (nb - 1 - j)) & 1;
                    int8_t f = fixed[static_cast<std::size_t>(local_of_.at(g->binaries[static_cast<std::size_t>(j)]))];
                    if (f >= 0 && f != vals[static_cast<std::size_t>(j)]) consistent = false;
                }
                if (!consistent) continue;
                double worst = 0.0;
                auto eval = [&](const MixedRow& r) {
                    double lhs = 0.0;
                    for (auto [var, c] : r.x_terms) lhs += c * x[var];
                    for (auto [b, gc] : r.z_terms)
                        for (int k = 0; k < nb; ++k)
                            if (g->binaries[static_cast<std::size_t>(k)] == b) lhs += gc * vals[static_cast<std::size_t>(k)];
                    return lhs - r.rhs;
                };
                for (const auto& r : g->rows) worst = std::max(worst, eval(r));
                for (const auto& r : g->binary_rows) worst = std::max(worst, eval(r));
                if (worst <= 1e-12) {
                    for (int j = 0; j < nb; ++j)
                        values[static_cast<std::size_t>(local_of_.at(g->binaries[static_cast<std::size_t>(j)]))] =
                            vals[static_cast<std::size_t>(j)];
                    break;
                }
            }
        }
        return values;
    }

    void consider(Outcome& out, const Eigen::VectorXd& x, const std::vector<int>& assignment,
                  double obj) const {
        if (!out.feasible || obj < out.objective - 1e-12) {
            out.x = x;
            out.assignment = assignment;
            out.objective = obj;
            out.feasible = true;
            return;
        }
        if (obj <= out.objective + 1e-12 &&
            std::lexicographical_compare(assignment.begin(), assignment.end(),
                                         out.assignment.begin(), out.assignment.end())) {
            out.x = x;
            out.assignment = assignment;
            out.objective = std::min(out.objective, obj);
        }
    }
};

}  // namespace

ProjectionResult project_physical(const Eigen::MatrixXd& window, const ConstraintSet& cs,
                                  const SolverOptions& opts) {
    const int nv = cs.n_vitals, W = cs.window_len;
    if (window.rows() != nv || window.cols() != W)
        throw std::invalid_argument("project_physical: window shape does not match constraint set");
    if (!window.allFinite())
        throw std::invalid_argument("project_physical: window contains non-finite values");

    Eigen::VectorXd d(cs.n_vars());
    for (int v = 0; v < nv; ++v)
        for (int t = 0; t < W; ++t) d[cs.var(v, t)] = window(v, t);

    ProjectionResult res;
    res.binaries.assign(static_cast<std::size_t>(cs.n_binaries), 0);

    // componentwise clamp solves every uncoupled variable exactly
    Eigen::VectorXd x = d.cwiseMax(cs.box_lo).cwiseMin(cs.box_hi);

    for (const Component& comp : decompose(cs)) {
        bool clamp_ok = true;
        for (const auto& row : comp.cont_rows)
            if (row.eval_lhs(x) > row.rhs + 1e-12) {
                clamp_ok = false;
                break;
            }
        std::vector<int> assignment;
        if (clamp_ok) {
            assignment.assign(comp.binaries.size(), 0);
            bool groups_ok = true;
            std::size_t cursor = 0;
            for (const IndicatorGroup* g : comp.groups) {
                std::vector<int> a = cs.group_assignment(*g, x, 1e-12);
                if (a.empty()) {
                    groups_ok = false;
                    break;
                }
                for (std::size_t j = 0; j < a.size(); ++j) assignment[cursor + j] = a[j];
                cursor += a.size();
            }
            clamp_ok = groups_ok;
        }
        if (clamp_ok) {
            for (std::size_t k = 0; k < comp.binaries.size(); ++k)
                res.binaries[static_cast<std::size_t>(comp.binaries[k])] =
                    static_cast<std::uint8_t>(assignment[k]);
            continue;
        }

        ComponentSolver solver(cs, comp, d, opts);
        auto outcome = solver.solve(opts.node_budget - res.nodes_explored);
        res.nodes_explored += outcome.nodes;
        if (!outcome.feasible) {
            res.status = SolveStatus::infeasible;
            return res;
        }
        if (!outcome.optimal) res.status = SolveStatus::node_limit;
        for (int var : comp.vars) x[var] = outcome.x[var];
        for (std::size_t k = 0; k < comp.binaries.size(); ++k)
            res.binaries[static_cast<std::size_t>(comp.binaries[k])] =
                static_cast<std::uint8_t>(outcome.assignment[k]);
    }

    res.corrected.resize(nv, W);
    res.phys_dist.resize(nv);
    res.objective = 0.0;
    for (int v = 0; v < nv; ++v) {
        double dist = 0.0;
        for (int t = 0; t < W; ++t) {
            double c = x[cs.var(v, t)];
            res.corrected(v, t) = c;
            double delta = window(v, t) - c;
            dist += delta * delta;
        }
        res.phys_dist[v] = dist;
        res.objective += dist;
    }
    return res;
}

std::vector<ProjectionResult> project_cohort(const std::vector<Eigen::MatrixXd>& windows,
                                             const ConstraintSet& cs, const SolverOptions& opts,
                                             int threads) {
    std::vector<ProjectionResult> out(windows.size());
    if (threads < 1) threads = 1;
    threads = std::min<int>(threads, static_cast<int>(windows.size()) > 0 ? static_cast<int>(windows.size()) : 1);
    if (threads == 1) {
        for (std::size_t i = 0; i < windows.size(); ++i)
            out[i] = project_physical(windows[i], cs, opts);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= windows.size()) return;
                out[i] = project_physical(windows[i], cs, opts);
            }
        });
    for (auto& th : pool) th.join();
    return out;
}

Eigen::VectorXd normal_distances(const Eigen::MatrixXd& corrected) {
    Eigen::VectorXd out(corrected.rows());
    for (Eigen::Index v = 0; v < corrected.rows(); ++v) {
        double dist = 0.0;
        for (Eigen::Index t = 0; t < corrected.cols(); ++t) {
            double x = corrected(v, t);
            double excess = x < 0.0 ? x : (x > 1.0 ? x - 1.0 : 0.0);
            dist += excess * excess;
        }
        out[v] = dist;
    }
    return out;
}

TrustStats TrustStats::fit(const std::vector<Eigen::VectorXd>& norm_dists) {
    if (norm_dists.size() < 2)
        throw std::invalid_argument("TrustStats::fit: need at least two sub-patients");
    TrustStats s;
    s.lo = norm_dists.front();
    s.hi = norm_dists.front();
    for (const auto& d : norm_dists) {
        s.lo = s.lo.cwiseMin(d);
        s.hi = s.hi.cwiseMax(d);
    }
    return s;
}

Eigen::VectorXd TrustStats::apply(const Eigen::VectorXd& norm_dist) const {
    Eigen::VectorXd out(norm_dist.size());
    for (Eigen::Index v = 0; v < norm_dist.size(); ++v) {
        double span = hi[v] - lo[v];
        out[v] = span > 0.0 ? std::clamp((norm_dist[v] - lo[v]) / span, 0.0, 1.0) : 0.0;
    }
    return out;
}

}  // namespace clinproj
