#include "hypolab/brackets.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <set>

namespace hypolab {

Vec lie_bracket(const VectorField& V1, const VectorField& V2, const Vec& x) {
    return V2.jacobian(x) * V1.eval(x) - V1.jacobian(x) * V2.eval(x);
}

VectorField bracket_field(const VectorField& V1, const VectorField& V2) {
    if (V1.dim != V2.dim) throw DimensionError("bracket_field: mismatched dimensions");
    VectorField f;
    f.dim = V1.dim;
    f.eval_fn = [V1, V2](const Vec& x) { return lie_bracket(V1, V2, x); };
    if (V1.jac_fn && V2.jac_fn && V1.hess_fn && V2.hess_fn) {
        // d/dx [V1,V2] h = V2''(h, V1) + V2' V1' h - V1''(h, V2) - V1' V2' h.
        f.jac_fn = [V1, V2](const Vec& x) -> Mat {
            const int n = static_cast<int>(x.size());
            Mat j1 = V1.jac_fn(x);
            Mat j2 = V2.jac_fn(x);
            Vec v1 = V1.eval_fn(x);
            Vec v2 = V2.eval_fn(x);
            Mat out = j2 * j1 - j1 * j2;
            for (int c = 0; c < n; ++c) {
                Vec unit = Vec::Unit(n, c);
                out.col(c) += V2.hess_fn(x, unit, v1) - V1.hess_fn(x, unit, v2);
            }
            return out;
        };
    }
    f.differentiability_order =
        std::max(0, std::min(V1.differentiability_order, V2.differentiability_order) - 1);
    return f;
}

Vec corrected_bracket(const ModelSpec& model, const VectorField& V, const Vec& x) {
    if (V.dim != model.n()) throw DimensionError("corrected_bracket: field dimension != n");
    Mat Vjac = V.jacobian(x);
    Vec Vval = V.eval(x);
    Vec b = model.sg.generator() * x + model.drift.eval(x);
    Mat bjac = model.sg.generator() + model.drift.jacobian(x);

    Vec out = Vjac * b - bjac * Vval;
    for (const auto& column : model.diffusion.columns) {
        Vec sk = column.eval(x);
        Mat skjac = column.jacobian(x);
        out += -skjac * (Vjac * sk) + 0.5 * V.hessian_action(x, sk, sk) + skjac * (skjac * Vval);
    }
    return out;
}

VectorField corrected_field(const ModelSpec& model, const VectorField& V) {
    VectorField f;
    f.dim = model.n();
    f.eval_fn = [model, V](const Vec& x) { return corrected_bracket(model, V, x); };
    f.differentiability_order = std::max(0, V.differentiability_order - 2);
    return f;
}

Vec corrected_bracket_nested(const ModelSpec& model, const VectorField& V, const Vec& x) {
    VectorField s0 = sigma0_field(model);
    Vec out = lie_bracket(s0, V, x);
    for (const auto& column : model.diffusion.columns) {
        VectorField inner = bracket_field(column, V);
        out += 0.5 * lie_bracket(column, inner, x);
    }
    return out;
}

BracketExpr::Ptr BracketExpr::generator(int k) {
    if (k < 1) throw ConfigError("bracket expression: generator index must be >= 1");
    auto node = std::make_shared<BracketExpr>();
    node->tag = Tag::generator;
    node->index = k;
    return node;
}

BracketExpr::Ptr BracketExpr::bracket(Ptr a, Ptr b) {
    if (!a || !b) throw Error("bracket expression: null child");
    auto node = std::make_shared<BracketExpr>();
    node->tag = Tag::bracket;
    node->left = std::move(a);
    node->right = std::move(b);
    return node;
}

BracketExpr::Ptr BracketExpr::corrected(Ptr v) {
    if (!v) throw Error("bracket expression: null child");
    auto node = std::make_shared<BracketExpr>();
    node->tag = Tag::corrected;
    node->left = std::move(v);
    return node;
}

int BracketExpr::depth() const {
    switch (tag) {
        case Tag::generator: return 0;
        case Tag::bracket: return 1 + std::max(left->depth(), right->depth());
        case Tag::corrected: return 1 + left->depth();
    }
    return 0;
}

std::string BracketExpr::render() const {
    switch (tag) {
        case Tag::generator: return "s" + std::to_string(index);
        case Tag::bracket: return "[" + left->render() + "," + right->render() + "]";
        case Tag::corrected: return "corr(" + left->render() + ")";
    }
    return "";
}

bool BracketExpr::equal(const BracketExpr& other) const {
    if (tag != other.tag) return false;
    switch (tag) {
        case Tag::generator: return index == other.index;
        case Tag::bracket: return left->equal(*other.left) && right->equal(*other.right);
        case Tag::corrected: return left->equal(*other.left);
    }
    return false;
}

std::vector<std::vector<BracketExpr::Ptr>> generate_levels(int m, int depth, std::size_t cap) {
    if (m < 1) throw ConfigError("generate_levels: m must be >= 1");
    if (depth < 0) throw ConfigError("generate_levels: depth must be >= 0");

    std::vector<std::vector<BracketExpr::Ptr>> levels;
    std::set<std::string> seen;  // dedupe by tree shape; render is injective on trees
    std::size_t total = 0;

    auto push_unique = [&](std::vector<BracketExpr::Ptr>& level, BracketExpr::Ptr expr) {
        std::string key = expr->render();
        if (!seen.insert(key).second) return;
        level.push_back(std::move(expr));
        if (++total > cap) {
            throw Error("generate_levels: expression count exceeds cap of " +
                        std::to_string(cap) + "; lower the depth");
        }
    };

    std::vector<BracketExpr::Ptr> base;
    for (int k = 1; k <= m; ++k) push_unique(base, BracketExpr::generator(k));
    levels.push_back(std::move(base));

    for (int d = 1; d <= depth; ++d) {
        std::vector<BracketExpr::Ptr> level;
        for (const auto& prev : levels.back()) {
            for (int k = 1; k <= m; ++k) {
                // [sk, sk] vanishes identically; skip it at the root too.
                if (prev->tag == BracketExpr::Tag::generator && prev->index == k) continue;
                push_unique(level, BracketExpr::bracket(BracketExpr::generator(k), prev));
            }
            push_unique(level, BracketExpr::corrected(prev));
        }
        levels.push_back(std::move(level));
    }
    return levels;
}

std::vector<BracketExpr::Ptr> generate_sets(int m, int depth, std::size_t cap) {
    std::vector<BracketExpr::Ptr> flat;
    for (auto& level : generate_levels(m, depth, cap)) {
        for (auto& expr : level) flat.push_back(std::move(expr));
    }
    return flat;
}

VectorField realize(const ModelSpec& model, const BracketExpr::Ptr& expr) {
    if (!expr) throw Error("realize: null expression");
    switch (expr->tag) {
        case BracketExpr::Tag::generator: {
            int k = expr->index;
            if (k < 1 || k > model.m())
                throw DimensionError("realize: generator index outside 1..m");
            return model.diffusion.columns[static_cast<std::size_t>(k - 1)];
        }
        case BracketExpr::Tag::bracket:
            return bracket_field(realize(model, expr->left), realize(model, expr->right));
        case BracketExpr::Tag::corrected:
            return corrected_field(model, realize(model, expr->left));
    }
    throw Error("realize: unreachable");
}

SpanReport hormander_rank(const ModelSpec& model, const Vec& x, int depth, double tol,
                          std::size_t cap) {
    require_dim(x, model.n(), "hormander_rank");
    if (!(tol > 0.0)) throw ConfigError("hormander_rank: tolerance must be positive");

    SpanReport report;
    report.point = x;
    report.dimension = model.n();
    report.depth_requested = depth;
    report.tolerance = tol;

    auto rank_of = [&](const std::vector<std::pair<std::string, Vec>>& rows) {
        Mat stacked(static_cast<Eigen::Index>(rows.size()), model.n());
        for (std::size_t i = 0; i < rows.size(); ++i) stacked.row(static_cast<Eigen::Index>(i)) = rows[i].second.transpose();
        Eigen::JacobiSVD<Mat> svd(stacked);
        report.singular_values = svd.singularValues();
        double largest = report.singular_values.size() ? report.singular_values(0) : 0.0;
        int rank = 0;
        for (Eigen::Index i = 0; i < report.singular_values.size(); ++i) {
            if (largest > 0.0 && report.singular_values(i) >= tol * largest) ++rank;
        }
        return rank;
    };

    // Levels are materialized lazily so that models whose span fills up early
    // never pay for (or overflow the cap with) deeper levels.
    for (int d = 0; d <= depth; ++d) {
        auto levels = generate_levels(model.m(), d, cap);
        const auto& level = levels.back();
        for (const auto& expr : level) {
            VectorField field = realize(model, expr);
            report.vectors.emplace_back(expr->render(), field.eval(x));
        }
        report.depth_used = d;
        report.rank = rank_of(report.vectors);
        if (report.rank >= model.n()) break;
    }
    return report;
}

std::vector<double> semimartingale_check(const ModelSpec& model, const SolutionPath& X,
                                         const FlowBundle& flows, const BrownianPath& path,
                                         const VectorField& V) {
    if (flows.Z.empty()) throw Error("semimartingale_check: bundle lacks Z");
    const TimeGrid& grid = flows.grid;
    const int m = model.m();

    std::vector<VectorField> column_brackets;
    column_brackets.reserve(static_cast<std::size_t>(m));
    for (const auto& column : model.diffusion.columns) {
        column_brackets.push_back(bracket_field(column, V));
    }

    std::vector<double> residuals(static_cast<std::size_t>(grid.steps) + 1);
    Vec rhs = V.eval(X.at(0));
    residuals[0] = e_norm(model.cfg, Vec(flows.Z[0] * V.eval(X.at(0)) - rhs));
    for (int j = 0; j < grid.steps; ++j) {
        const Mat& Zj = flows.Z[static_cast<std::size_t>(j)];
        Vec xj = X.at(j);
        for (int k = 0; k < m; ++k) {
            rhs += (Zj * column_brackets[static_cast<std::size_t>(k)].eval(xj)) *
                   path.increments(j, k);
        }
        rhs += (Zj * corrected_bracket(model, V, xj)) * grid.dt;
        Vec lhs = flows.Z[static_cast<std::size_t>(j) + 1] * V.eval(X.at(j + 1));
        residuals[static_cast<std::size_t>(j) + 1] = e_norm(model.cfg, Vec(lhs - rhs));
    }
    return residuals;
}

}  // namespace hypolab
