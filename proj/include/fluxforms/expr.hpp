#pragma once

// Small expression trees parsed from JSON, evaluated with forward-mode dual
// numbers so custom fields come with exact first derivatives.
//
// Grammar (JSON values):
//   number                          constant
//   "x","y","z","w","v" / "x0".."x9"  coordinates
//   {"add":[e,...]} {"mul":[e,...]} {"sub":[a,b]} {"div":[a,b]}
//   {"neg":e} {"pow":[e,k]} (integer k)
//   {"sin":e} {"cos":e} {"exp":e} {"log":e} {"sqrt":e}

#include <memory>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace fluxforms {

using Vec = Eigen::VectorXd;

class Expr {
 public:
  virtual ~Expr() = default;
  virtual double value(const Vec& p) const = 0;
  // Value and gradient together.
  virtual void eval(const Vec& p, double& v, Vec& grad) const = 0;
};

using ExprPtr = std::shared_ptr<const Expr>;

ExprPtr parse_expression(const nlohmann::json& j, int dimension);

}  // namespace fluxforms
