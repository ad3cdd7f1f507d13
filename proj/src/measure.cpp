#include "geofactor/measure.hpp"

#include "geofactor/error.hpp"

#include <cmath>
#include <set>

namespace geofactor {

MeasureSpace::MeasureSpace(std::vector<std::string> labels, Eigen::VectorXd weights)
    : labels_(std::move(labels)), weights_(std::move(weights))
{
  if (labels_.empty())
    throw InvalidArgument("measure space needs at least one point");
  if (static_cast<std::size_t>(weights_.size()) != labels_.size())
    throw InvalidArgument("measure space: " + std::to_string(labels_.size()) + " labels but "
                          + std::to_string(weights_.size()) + " weights");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < labels_.size(); ++i)
  {
    if (!seen.insert(labels_[i]).second)
      throw InvalidArgument("measure space: duplicate label '" + labels_[i] + "'");
    const double w = weight(i);
    if (!(w > 0.0) || !std::isfinite(w))
      throw InvalidArgument("measure space: weight of '" + labels_[i]
                            + "' must be finite and strictly positive");
  }
}

MeasureSpace MeasureSpace::counting(std::size_t n, const std::string& prefix)
{
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    labels.push_back(prefix + std::to_string(i));
  return MeasureSpace(std::move(labels), Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
}

std::optional<std::size_t> MeasureSpace::index_of(const std::string& label) const
{
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label)
      return i;
  return std::nullopt;
}

bool MeasureSpace::operator==(const MeasureSpace& other) const
{
  return labels_ == other.labels_ && weights_ == other.weights_;
}

SpacePtr make_space(std::vector<std::string> labels, Eigen::VectorXd weights)
{
  return std::make_shared<const MeasureSpace>(std::move(labels), std::move(weights));
}

SpacePtr counting_space(std::size_t n, const std::string& prefix)
{
  return std::make_shared<const MeasureSpace>(MeasureSpace::counting(n, prefix));
}

bool same_space(const SpacePtr& a, const SpacePtr& b)
{
  if (a == b)
    return true;
  if (!a || !b)
    return false;
  return *a == *b;
}

RealFunction::RealFunction(SpacePtr space, Eigen::VectorXd values)
    : space_(std::move(space)), values_(std::move(values))
{
  if (!space_)
    throw InvalidArgument("function without a space");
  if (static_cast<std::size_t>(values_.size()) != space_->size())
    throw SpaceMismatch("function has " + std::to_string(values_.size()) + " values on a space of "
                        + std::to_string(space_->size()) + " points");
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    if (!(values_[i] >= 0.0))
      throw InvalidArgument("functions are nonnegative; got " + std::to_string(values_[i])
                            + " at '" + space_->labels()[static_cast<std::size_t>(i)] + "'");
}

RealFunction RealFunction::constant(SpacePtr space, double c)
{
  const auto n = static_cast<Eigen::Index>(space->size());
  return RealFunction(std::move(space), Eigen::VectorXd::Constant(n, c));
}

RealFunction RealFunction::scaled(double c) const
{
  return RealFunction(space_, values_ * c);
}

PositiveKernelOperator::PositiveKernelOperator(SpacePtr domain, SpacePtr codomain,
                                               Eigen::MatrixXd kernel)
    : domain_(std::move(domain)), codomain_(std::move(codomain)), kernel_(std::move(kernel))
{
  if (!domain_ || !codomain_)
    throw InvalidArgument("operator needs a domain and a codomain");
  if (static_cast<std::size_t>(kernel_.rows()) != codomain_->size()
      || static_cast<std::size_t>(kernel_.cols()) != domain_->size())
    throw SpaceMismatch("kernel shape " + std::to_string(kernel_.rows()) + "x"
                        + std::to_string(kernel_.cols()) + " does not match codomain x domain "
                        + std::to_string(codomain_->size()) + "x" + std::to_string(domain_->size()));
  for (Eigen::Index i = 0; i < kernel_.size(); ++i)
    if (!(kernel_.data()[i] >= 0.0) || !std::isfinite(kernel_.data()[i]))
      throw InvalidArgument("kernel entries must be finite and nonnegative");
}

Eigen::MatrixXd PositiveKernelOperator::weighted_kernel() const
{
  return kernel_ * domain_->weights().asDiagonal();
}

RealFunction apply(const PositiveKernelOperator& op, const RealFunction& f)
{
  if (!same_space(op.domain(), f.space()))
    throw SpaceMismatch("apply: function does not live on the operator's domain");
  Eigen::VectorXd out = op.kernel() * f.values().cwiseProduct(op.domain()->weights());
  return RealFunction(op.codomain(), std::move(out));
}

RealFunction adjoint_apply(const PositiveKernelOperator& op, const RealFunction& g)
{
  if (!same_space(op.codomain(), g.space()))
    throw SpaceMismatch("adjoint_apply: function does not live on the operator's codomain");
  Eigen::VectorXd out = op.kernel().transpose() * g.values().cwiseProduct(op.codomain()->weights());
  return RealFunction(op.domain(), std::move(out));
}

double pairing(const RealFunction& f, const RealFunction& g)
{
  if (!same_space(f.space(), g.space()))
    throw SpaceMismatch("pairing: functions live on different spaces");
  return (f.values().array() * g.values().array() * f.space()->weights().array()).sum();
}

double lp_norm(const MeasureSpace& space, const Eigen::VectorXd& values, double r)
{
  if (static_cast<std::size_t>(values.size()) != space.size())
    throw SpaceMismatch("lp_norm: value count does not match the space");
  if (r == 0.0 || std::isnan(r))
    throw InvalidArgument("lp_norm: exponent must be nonzero");
  if (r == kInfinity)
    return values.size() == 0 ? 0.0 : values.maxCoeff();
  if (r == -kInfinity)
    throw InvalidArgument("lp_norm: exponent -inf is not supported");
  if (r < 0.0)
  {
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (!(values[i] > 0.0))
        throw InvalidArgument("lp_norm: negative exponent needs a strictly positive function (zero at '"
                              + space.labels()[static_cast<std::size_t>(i)] + "')");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values[i] > 0.0)
      acc += space.weights()[i] * std::pow(values[i], r);
  return std::pow(acc, 1.0 / r);
}

double lp_norm(const RealFunction& f, double r)
{
  return lp_norm(*f.space(), f.values(), r);
}

RealFunction geometric_mean(std::span<const RealFunction> fs, std::span<const double> alphas)
{
  if (fs.empty() || fs.size() != alphas.size())
    throw InvalidArgument("geometric_mean: need one weight per function");
  const SpacePtr& space = fs.front().space();
  for (const auto& f : fs)
    if (!same_space(space, f.space()))
      throw SpaceMismatch("geometric_mean: functions live on different spaces");
  Eigen::VectorXd out = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(space->size()));
  for (std::size_t j = 0; j < fs.size(); ++j)
  {
    if (alphas[j] == 0.0)
      continue;
    out.array() *= fs[j].values().array().pow(alphas[j]);
  }
  return RealFunction(space, std::move(out));
}

bool saturation_check(const PositiveKernelOperator& op)
{
  return saturation_check(op, std::vector<bool>(op.codomain()->size(), true));
}

bool saturation_check(const PositiveKernelOperator& op, const std::vector<bool>& mask)
{
  const auto& k = op.kernel();
  for (Eigen::Index x = 0; x < k.rows(); ++x)
  {
    if (!mask[static_cast<std::size_t>(x)])
      continue;
    if (!(k.row(x).maxCoeff() > 0.0))
      return false;
  }
  return true;
}

double kothe_dual_exponent(double q)
{
  if (!(q > 0.0))
    throw InvalidArgument("kothe_dual_exponent: q must lie in (0, inf]");
  if (q == kInfinity)
    return 1.0;
  if (q == 1.0)
    return kInfinity;
  return q / (q - 1.0);
}

} // namespace geofactor
