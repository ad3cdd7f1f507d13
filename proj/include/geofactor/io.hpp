#pragma once

#include "geofactor/brascamp_lieb.hpp"
#include "geofactor/constructions.hpp"
#include "geofactor/duality.hpp"
#include "geofactor/error.hpp"
#include "geofactor/kakeya.hpp"
#include "geofactor/kernel.hpp"

#include <json.hpp>

#include <string>

namespace geofactor {

using Json = nlohmann::ordered_json;

/// Malformed JSON text or a document that does not fit the expected schema.
class JsonError : public Error
{
public:
  using Error::Error;
};

/// Parses text; syntax errors carry "line L, column C" in the message.
Json parse_json(const std::string& text, const std::string& source = "<input>");
Json read_json_file(const std::string& path);
/// Two-space indented, trailing newline.
void write_json_file(const std::string& path, const Json& doc);
std::string dump_json(const Json& doc);

/// Exponents are numbers or the string "inf".
double exponent_from_json(const Json& v);
Json exponent_to_json(double p);

Json to_json(const MeasureSpace& space);
SpacePtr space_from_json(const Json& j);

/// Kernel rows are codomain points.
Json to_json(const PositiveKernelOperator& op);
PositiveKernelOperator operator_from_json(const Json& j);

Json to_json(const RealFunction& f);
RealFunction function_from_json(const Json& j);
/// A function document, or a bare array of values on the given space.
RealFunction function_from_json(const Json& j, const SpacePtr& space);

Json to_json(const GeometricMeanProblem& problem);
GeometricMeanProblem problem_from_json(const Json& j);

/// {"G","gs","K"} plus whatever extra fields the caller adds.
Json to_json(const FactorisationCertificate& cert);
/// The G and gs are rebound to the problem's target space.
FactorisationCertificate certificate_from_json(const Json& j, const GeometricMeanProblem& problem);

Json to_json(const KakeyaFamily& family);
KakeyaFamily family_from_json(const Json& j);

/// {"target","inputs","values","p","r"}; values flat with x slowest.
Json to_json(const GeneralKernel& kernel);
GeneralKernel kernel_from_json(const Json& j);

Json to_json(const Rational& r);
Json to_json(const Subspace& V);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_digest(const std::string& bytes);

} // namespace geofactor
