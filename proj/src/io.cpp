#include "geofactor/io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace geofactor {

namespace {

std::string line_column(const std::string& text, std::size_t byte)
{
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
  {
    if (text[i] == '\n')
    {
      ++line;
      column = 1;
    }
    else
      ++column;
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

const Json& field(const Json& j, const char* key)
{
  if (!j.is_object())
    throw JsonError(std::string("expected an object with field '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end())
    throw JsonError(std::string("missing field '") + key + "'");
  return *it;
}

const Json& array_field(const Json& j, const char* key)
{
  const Json& v = field(j, key);
  if (!v.is_array())
    throw JsonError(std::string("field '") + key + "' must be an array");
  return v;
}

double number(const Json& v, const std::string& what)
{
  if (!v.is_number())
    throw JsonError(what + " must be a number");
  return v.get<double>();
}

std::vector<double> numbers(const Json& v, const std::string& what)
{
  if (!v.is_array())
    throw JsonError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v)
    out.push_back(number(e, what));
  return out;
}

Eigen::VectorXd vector_of(const Json& v, const std::string& what)
{
  const auto xs = numbers(v, what);
  Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = xs[i];
  return out;
}

Json array_of(const Eigen::VectorXd& v)
{
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(v[i]);
  return out;
}

FieldVector field_vector(const Json& v, const std::string& what)
{
  if (!v.is_array())
    throw JsonError(what + " must be an array of integers");
  FieldVector out;
  for (const auto& e : v)
  {
    if (!e.is_number_integer())
      throw JsonError(what + " must be an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

} // namespace

Json parse_json(const std::string& text, const std::string& source)
{
  try
  {
    return Json::parse(text);
  }
  catch (const nlohmann::json::parse_error& e)
  {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw JsonError(source + ": malformed JSON at " + line_column(text, at));
  }
}

Json read_json_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw JsonError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path);
}

std::string dump_json(const Json& doc)
{
  return doc.dump(2) + "\n";
}

void write_json_file(const std::string& path, const Json& doc)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw JsonError("cannot write '" + path + "'");
  out << dump_json(doc);
}

double exponent_from_json(const Json& v)
{
  if (v.is_string())
  {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity")
      return kInfinity;
    throw JsonError("exponent string must be \"inf\", got \"" + s + "\"");
  }
  return number(v, "exponent");
}

Json exponent_to_json(double p)
{
  if (std::isinf(p))
    return "inf";
  return p;
}

Json to_json(const MeasureSpace& space)
{
  Json points = Json::array();
  for (const auto& l : space.labels())
    points.push_back(l);
  return Json{{"points", points}, {"weights", array_of(space.weights())}};
}

SpacePtr space_from_json(const Json& j)
{
  const Json& pts = array_field(j, "points");
  std::vector<std::string> labels;
  for (const auto& p : pts)
    labels.push_back(p.is_string() ? p.get<std::string>() : p.dump());
  Eigen::VectorXd w = j.contains("weights") ? vector_of(j.at("weights"), "weights")
                                            : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(labels.size()));
  return make_space(std::move(labels), std::move(w));
}

Json to_json(const PositiveKernelOperator& op)
{
  Json rows = Json::array();
  const auto& k = op.kernel();
  for (Eigen::Index x = 0; x < k.rows(); ++x)
    rows.push_back(array_of(k.row(x).transpose()));
  return Json{{"domain", to_json(*op.domain())}, {"codomain", to_json(*op.codomain())}, {"kernel", rows}};
}

PositiveKernelOperator operator_from_json(const Json& j)
{
  const SpacePtr dom = space_from_json(field(j, "domain"));
  const SpacePtr cod = space_from_json(field(j, "codomain"));
  const Json& rows = array_field(j, "kernel");
  if (rows.size() != cod->size())
    throw JsonError("kernel needs one row per codomain point (" + std::to_string(cod->size()) + ")");
  Eigen::MatrixXd k(static_cast<Eigen::Index>(cod->size()), static_cast<Eigen::Index>(dom->size()));
  for (std::size_t x = 0; x < rows.size(); ++x)
  {
    const auto r = numbers(rows[x], "kernel row");
    if (r.size() != dom->size())
      throw JsonError("kernel rows need one entry per domain point (" + std::to_string(dom->size()) + ")");
    for (std::size_t y = 0; y < r.size(); ++y)
      k(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = r[y];
  }
  return PositiveKernelOperator(dom, cod, std::move(k));
}

Json to_json(const RealFunction& f)
{
  return Json{{"space", to_json(*f.space())}, {"values", array_of(f.values())}};
}

RealFunction function_from_json(const Json& j)
{
  return RealFunction(space_from_json(field(j, "space")), vector_of(field(j, "values"), "values"));
}

RealFunction function_from_json(const Json& j, const SpacePtr& space)
{
  if (j.is_array())
    return RealFunction(space, vector_of(j, "values"));
  if (j.contains("space") && !same_space(space_from_json(j.at("space")), space))
    throw SpaceMismatch("function lives on a different space");
  return RealFunction(space, vector_of(field(j, "values"), "values"));
}

Json to_json(const GeometricMeanProblem& problem)
{
  Json ops = Json::array();
  for (const auto& op : problem.operators())
    ops.push_back(to_json(op));
  Json p = Json::array();
  for (double v : problem.input_exponents())
    p.push_back(exponent_to_json(v));
  return Json{{"operators", ops}, {"alphas", problem.alphas()}, {"p", p}, {"q", exponent_to_json(problem.q())}};
}

GeometricMeanProblem problem_from_json(const Json& j)
{
  std::vector<PositiveKernelOperator> ops;
  for (const auto& o : array_field(j, "operators"))
    ops.push_back(operator_from_json(o));
  const auto alphas = numbers(field(j, "alphas"), "alphas");
  std::vector<double> p;
  for (const auto& v : array_field(j, "p"))
    p.push_back(exponent_from_json(v));
  return GeometricMeanProblem(std::move(ops), alphas, std::move(p), exponent_from_json(field(j, "q")));
}

Json to_json(const FactorisationCertificate& cert)
{
  Json gs = Json::array();
  for (const auto& g : cert.gs)
    gs.push_back(to_json(g));
  return Json{{"G", to_json(cert.G)}, {"gs", gs}, {"K", cert.K}};
}

FactorisationCertificate certificate_from_json(const Json& j, const GeometricMeanProblem& problem)
{
  FactorisationCertificate cert{function_from_json(field(j, "G"), problem.target()), {},
                                number(field(j, "K"), "K")};
  for (const auto& g : array_field(j, "gs"))
    cert.gs.push_back(function_from_json(g, problem.target()));
  return cert;
}

Json to_json(const KakeyaFamily& family)
{
  Json fams = Json::array();
  for (const auto& fam : family.families)
  {
    Json lines = Json::array();
    for (const auto& wl : fam)
      lines.push_back(Json{{"base", wl.line.base()}, {"dir", wl.line.direction()}, {"a", wl.a}});
    fams.push_back(lines);
  }
  return Json{{"q", family.q}, {"n", family.n}, {"families", fams}};
}

KakeyaFamily family_from_json(const Json& j)
{
  KakeyaFamily f;
  const Json& q = field(j, "q");
  const Json& n = field(j, "n");
  if (!q.is_number_integer() || !n.is_number_integer() || n.get<long long>() < 0)
    throw JsonError("'q' and 'n' must be nonnegative integers");
  f.q = q.get<int>();
  f.n = n.get<std::size_t>();
  for (const auto& fam : array_field(j, "families"))
  {
    if (!fam.is_array())
      throw JsonError("each family must be an array of lines");
    std::vector<WeightedLine> lines;
    for (const auto& l : fam)
      lines.push_back(WeightedLine{KakeyaLine(f.q, field_vector(field(l, "base"), "base"), field_vector(field(l, "dir"), "dir")),
                                   l.contains("a") ? number(l.at("a"), "a") : 1.0});
    f.families.push_back(std::move(lines));
  }
  f.validate();
  return f;
}

Json to_json(const GeneralKernel& kernel)
{
  Json inputs = Json::array();
  for (const auto& s : kernel.inputs)
    inputs.push_back(to_json(*s));
  Json p = Json::array();
  for (double v : kernel.input_exponents)
    p.push_back(exponent_to_json(v));
  return Json{{"target", to_json(*kernel.target)}, {"inputs", inputs}, {"values", kernel.values},
              {"p", p}, {"r", exponent_to_json(kernel.output_exponent)}};
}

GeneralKernel kernel_from_json(const Json& j)
{
  std::vector<SpacePtr> inputs;
  for (const auto& s : array_field(j, "inputs"))
    inputs.push_back(space_from_json(s));
  std::vector<double> p;
  for (const auto& v : array_field(j, "p"))
    p.push_back(exponent_from_json(v));
  return GeneralKernel(space_from_json(field(j, "target")), std::move(inputs), numbers(field(j, "values"), "values"),
                       std::move(p), exponent_from_json(field(j, "r")));
}

Json to_json(const Rational& r)
{
  return to_string(r);
}

Json to_json(const Subspace& V)
{
  Json basis = Json::array();
  for (const auto& row : V.basis())
  {
    Json r = Json::array();
    for (const auto& v : row)
      r.push_back(to_json(v));
    basis.push_back(r);
  }
  return Json{{"dim", V.dim()}, {"basis", basis}};
}

std::string fnv1a_digest(const std::string& bytes)
{
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes)
  {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i)
  {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

} // namespace geofactor
