// Observations (y_i, x_i, t_i) and CSV I/O. The CSV schema is a header
// row "y,t,x1,...,xp" followed by one numeric row per observation.
#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>

namespace isogplm {

struct Dataset {
  Eigen::VectorXd y;  // response
  Eigen::MatrixXd X;  // n x p carriers (p may be 0)
  Eigen::VectorXd t;  // scalar regressor, expected in [0,1]

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }
};

Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv_file(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace isogplm
