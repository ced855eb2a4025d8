#include "mediaframe/multivariate.hpp"

#include "mediaframe/distributions.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace mediaframe {

Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& matrix) {
    if (matrix.rows() == 0 || matrix.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "standardize");
    Standardized out;
    std::vector<double> means;
    std::vector<double> sds;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        const double mean = matrix.col(j).mean();
        const double sd = std::sqrt((matrix.col(j).array() - mean).square().mean());
        if (!(sd > 0.0)) {
            out.dropped.push_back(static_cast<int>(j));
            continue;
        }
        out.kept.push_back(static_cast<int>(j));
        means.push_back(mean);
        sds.push_back(sd);
    }
    const auto k = static_cast<Eigen::Index>(out.kept.size());
    out.data.resize(matrix.rows(), k);
    out.means = Eigen::Map<const Eigen::VectorXd>(means.data(), k);
    out.sds = Eigen::Map<const Eigen::VectorXd>(sds.data(), k);
    for (Eigen::Index c = 0; c < k; ++c)
        out.data.col(c) = (matrix.col(out.kept[c]).array() - out.means(c)) / out.sds(c);
    return out;
}

PcaModel pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& matrix,
                 std::vector<std::string> feature_names, double variance_target) {
    if (matrix.rows() == 0 || matrix.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "pca_fit");
    if (!(variance_target > 0.0 && variance_target <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "pca_fit: variance target must be in (0, 1]");
    if (feature_names.empty())
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) feature_names.push_back("f" + std::to_string(j));
    if (static_cast<Eigen::Index>(feature_names.size()) != matrix.cols())
        throw Error(ErrorCode::LengthMismatch, "pca_fit: feature names");

    const Eigen::MatrixXd centered = matrix.rowwise() - matrix.colwise().mean();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd var = svd.singularValues().array().square();
    const double total = var.sum();
    if (!(total > 0.0)) throw Error(ErrorCode::ZeroVariance, "pca_fit: zero total variance");

    PcaModel model;
    model.feature_names = std::move(feature_names);
    model.explained_variance_ratios = var / total;

    double cumulative = 0.0;
    const auto available = static_cast<int>(var.size());
    model.n_components = available;
    for (int k = 0; k < available; ++k) {
        cumulative += model.explained_variance_ratios(k);
        if (cumulative >= variance_target - 1e-12) {
            model.n_components = k + 1;
            break;
        }
    }

    model.components = svd.matrixV().leftCols(model.n_components).transpose();
    // Fix signs so the dominant loading of each component is positive.
    for (Eigen::Index c = 0; c < model.components.rows(); ++c) {
        Eigen::Index arg = 0;
        model.components.row(c).cwiseAbs().maxCoeff(&arg);
        if (model.components(c, arg) < 0) model.components.row(c) *= -1.0;
    }
    return model;
}

std::vector<std::string> attribute_features(const PcaModel& model) {
    std::vector<std::string> names;
    for (Eigen::Index c = 0; c < model.components.rows(); ++c) {
        Eigen::Index arg = 0;
        model.components.row(c).cwiseAbs().maxCoeff(&arg);
        const auto& name = model.feature_names[static_cast<std::size_t>(arg)];
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
    return names;
}

namespace {

struct DisjointSets {
    std::vector<int> parent;
    explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    // The smaller root wins so a group's root is its best-ranked member.
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

Selection select_features(std::vector<Candidate> candidates, const SelectionOptions& options) {
    std::erase_if(candidates, [&](const Candidate& c) { return !(c.granger.p_value < options.alpha); });
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        const double ca = std::abs(a.granger.cc);
        const double cb = std::abs(b.granger.cc);
        if (ca != cb) return ca > cb;
        if (a.granger.p_value != b.granger.p_value) return a.granger.p_value < b.granger.p_value;
        return a.name < b.name;
    });

    std::erase_if(candidates, [](const Candidate& c) {
        return c.values.size() == 0 || (c.values.array() == c.values(0)).all();
    });
    const Eigen::Index rows = candidates.empty() ? 0 : candidates.front().values.size();
    for (const auto& c : candidates)
        if (c.values.size() != rows)
            throw Error(ErrorCode::LengthMismatch, "select_features: unaligned candidates");

    Selection out;
    const int m = static_cast<int>(candidates.size());
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    if (m >= 2) {
        Eigen::MatrixXd pool(rows, m);
        std::vector<std::string> names;
        for (int j = 0; j < m; ++j) {
            pool.col(j) = candidates[j].values;
            names.push_back(candidates[j].name);
        }
        const Standardized z = standardize(pool);
        const PcaModel pca = pca_fit(z.data, names, options.variance_target);
        out.attributed = attribute_features(pca);

        // Feature j in the retained space: loadings scaled by component standard deviations.
        const Eigen::VectorXd scale =
            pca.explained_variance_ratios.head(pca.n_components).cwiseSqrt();
        const Eigen::MatrixXd reduced = scale.asDiagonal() * pca.components;
        DisjointSets groups(m);
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                const double ni = reduced.col(i).norm();
                const double nj = reduced.col(j).norm();
                if (ni <= 0.0 || nj <= 0.0) continue;
                const double cosine = reduced.col(i).dot(reduced.col(j)) / (ni * nj);
                if (std::abs(cosine) >= options.redundancy) groups.unite(i, j);
            }
        }

        auto attributed_pos = [&](int j) {
            const auto it = std::find(out.attributed.begin(), out.attributed.end(), candidates[j].name);
            return it == out.attributed.end() ? std::numeric_limits<std::ptrdiff_t>::max()
                                              : it - out.attributed.begin();
        };
        std::map<int, int> representative;  // group root -> chosen member
        for (int j = 0; j < m; ++j) {
            const int root = groups.find(j);
            auto [it, inserted] = representative.try_emplace(root, j);
            if (!inserted && attributed_pos(j) < attributed_pos(it->second)) it->second = j;
        }
        order.clear();
        for (const auto& [root, member] : representative) order.push_back(member);
    }

    for (int j : order) {
        if (static_cast<int>(out.features.size()) == options.k) break;
        out.features.push_back(candidates[j]);
    }
    out.fewer_than_k = static_cast<int>(out.features.size()) < options.k;
    return out;
}

VarResult var_fit(const Eigen::Ref<const Eigen::VectorXd>& sentiment,
                  const Eigen::Ref<const Eigen::MatrixXd>& features,
                  std::vector<std::string> feature_names) {
    const Eigen::Index t = sentiment.size();
    const Eigen::Index f = features.cols();
    if (f < 1) throw Error(ErrorCode::InvalidArgument, "var_fit: need at least one feature");
    if (features.rows() != t) throw Error(ErrorCode::LengthMismatch, "var_fit: unaligned series");
    if (t < 4 * (f + 1))
        throw Error(ErrorCode::InsufficientObservations,
                    "var_fit: " + std::to_string(t) + " observations for " + std::to_string(f) + " features");
    if (sentiment.array().isNaN().any() || features.array().isNaN().any())
        throw Error(ErrorCode::MissingValues, "var_fit");
    if (feature_names.empty())
        for (Eigen::Index j = 0; j < f; ++j) feature_names.push_back("f" + std::to_string(j));

    const Eigen::Index m = f + 1;
    Eigen::MatrixXd levels(t, m);
    levels.col(0) = sentiment;
    levels.rightCols(f) = features;

    const Eigen::Index n = t - 1;
    Eigen::MatrixXd design(n, 1 + m);
    design.col(0).setOnes();
    design.rightCols(m) = levels.topRows(n);
    const Eigen::MatrixXd response = levels.bottomRows(n);

    VarResult out;
    out.selected_features = std::move(feature_names);
    out.coefficient_matrix.resize(m, 1 + m);
    Eigen::VectorXd sentiment_fitted;
    double ssr_full = 0.0;
    for (Eigen::Index eq = 0; eq < m; ++eq) {
        const auto fit = least_squares(design, response.col(eq));
        out.coefficient_matrix.row(eq) = fit.beta.transpose();
        if (eq == 0) {
            sentiment_fitted = response.col(0) - fit.residuals;
            ssr_full = fit.ssr;
        }
    }
    const auto restricted = least_squares(design.leftCols(2), response.col(0));

    out.joint_df_num = static_cast<int>(f);
    out.joint_df_den = static_cast<int>(n - 1 - m);
    if (ssr_full <= 0.0) {
        out.joint_f = std::numeric_limits<double>::infinity();
        out.joint_p = 0.0;
    } else {
        out.joint_f = std::max(0.0, (restricted.ssr - ssr_full) / f) / (ssr_full / out.joint_df_den);
        out.joint_p = f_p_value(out.joint_f, out.joint_df_num, out.joint_df_den);
    }
    out.fit = ols_fit(sentiment_fitted, response.col(0));
    return out;
}

}  // namespace mediaframe
