#ifndef MEDIAFRAME_MULTIVARIATE_HPP
#define MEDIAFRAME_MULTIVARIATE_HPP

// Scaling, PCA, loading-based feature attribution, feature selection and the lag-1 VAR.

#include "mediaframe/core.hpp"
#include "mediaframe/econometrics.hpp"

#include <string>
#include <vector>

namespace mediaframe {

struct Standardized {
    Eigen::MatrixXd data;         // kept columns only
    Eigen::VectorXd means;        // per kept column
    Eigen::VectorXd sds;          // population sd per kept column
    std::vector<int> kept;        // indices into the input columns
    std::vector<int> dropped;     // constant input columns
};

/// Column-wise z-scores using the population sd. Constant columns are dropped.
/// Throws EmptyMatrix.
Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& matrix);

struct PcaModel {
    Eigen::MatrixXd components;                 // n_components x features, orthonormal rows
    Eigen::VectorXd explained_variance_ratios;  // every component, non-increasing, sums to 1
    int n_components = 0;
    std::vector<std::string> feature_names;

    double retained_variance() const {
        return explained_variance_ratios.head(n_components).sum();
    }
};

/// Principal components from the SVD of the (centered) input. Keeps the smallest
/// k whose cumulative explained variance reaches `variance_target`. Throws EmptyMatrix.
PcaModel pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& matrix,
                 std::vector<std::string> feature_names = {}, double variance_target = 0.95);

/// Name of the largest-|loading| feature of each retained component, first occurrence kept.
std::vector<std::string> attribute_features(const PcaModel& model);

struct Candidate {
    std::string name;
    Eigen::VectorXd values;  // aligned with every other candidate
    GrangerResult granger;
};

struct Selection {
    std::vector<Candidate> features;
    std::vector<std::string> attributed;  // attribute_features output on the candidate pool
    bool fewer_than_k = false;
};

struct SelectionOptions {
    int k = 6;
    double alpha = 0.05;
    double variance_target = 0.95;
    /// Two candidates are redundant when their rank-reduced PCA representations have
    /// |cosine| at least this large.
    double redundancy = 0.9;
};

/// Ranks significant candidates by |cc| desc, p asc, then name; collapses redundant
/// groups to the member listed first by attribute_features; returns the top k.
Selection select_features(std::vector<Candidate> candidates, const SelectionOptions& options = {});

struct VarResult {
    std::vector<std::string> selected_features;
    int lag = 1;
    /// Rows: equations (sentiment first); columns: intercept then lag-1 of each variable.
    Eigen::MatrixXd coefficient_matrix;
    double joint_f = 0.0;
    double joint_p = 1.0;
    int joint_df_num = 0;
    int joint_df_den = 0;
    OlsResult fit;  // sentiment regressed on its VAR fitted values
};

/// Lag-1 VAR of [sentiment, features...], equation-wise least squares. joint_p tests
/// exclusion of every feature lag from the sentiment equation.
/// Throws InsufficientObservations, RankDeficient.
VarResult var_fit(const Eigen::Ref<const Eigen::VectorXd>& sentiment,
                  const Eigen::Ref<const Eigen::MatrixXd>& features,
                  std::vector<std::string> feature_names = {});

}  // namespace mediaframe

#endif  // MEDIAFRAME_MULTIVARIATE_HPP
