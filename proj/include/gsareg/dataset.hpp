#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsareg/model_spec.hpp"

namespace gsareg {

// Identity of one design column: which underlying series it comes from and at
// what lag. variable == 0 marks a lag of the response itself.
struct ColumnLabel {
    std::string name;
    int variable = 0;
    int lag = 0;
};

// Immutable regression data. Columns and the response are stored both as given
// (for serialization) and de-meaned (for estimation, where the constant term
// is imposed implicitly by de-meaning).
class Dataset {
public:
    Dataset(Eigen::VectorXd y, Eigen::MatrixXd X, std::vector<ColumnLabel> labels = {})
        : y_raw_(std::move(y)), x_raw_(std::move(X)), labels_(std::move(labels)) {
        const auto n = static_cast<int>(y_raw_.size());
        const auto p = static_cast<int>(x_raw_.cols());
        if (n == 0 || p == 0) throw std::invalid_argument("Dataset: empty response or design");
        if (x_raw_.rows() != n) throw std::invalid_argument("Dataset: y length != X rows");
        if (n <= p) throw std::invalid_argument("Dataset: requires n > p");
        if (!y_raw_.allFinite() || !x_raw_.allFinite())
            throw std::invalid_argument("Dataset: non-finite values");
        if (labels_.empty()) {
            labels_.reserve(p);
            for (int j = 0; j < p; ++j) labels_.push_back({"x" + std::to_string(j + 1), j + 1, 0});
        }
        if (static_cast<int>(labels_.size()) != p)
            throw std::invalid_argument("Dataset: label count != column count");
        y_ = y_raw_.array() - y_raw_.mean();
        x_ = x_raw_.rowwise() - x_raw_.colwise().mean();
    }

    int n() const { return static_cast<int>(y_.size()); }
    int p() const { return static_cast<int>(x_.cols()); }

    const Eigen::VectorXd& y() const { return y_; }
    const Eigen::MatrixXd& X() const { return x_; }
    const Eigen::VectorXd& y_raw() const { return y_raw_; }
    const Eigen::MatrixXd& X_raw() const { return x_raw_; }
    const std::vector<ColumnLabel>& labels() const { return labels_; }

    ModelSpec full_spec() const { return ModelSpec::full(p()); }

private:
    Eigen::VectorXd y_raw_;
    Eigen::MatrixXd x_raw_;
    std::vector<ColumnLabel> labels_;
    Eigen::VectorXd y_;
    Eigen::MatrixXd x_;
};

}  // namespace gsareg
