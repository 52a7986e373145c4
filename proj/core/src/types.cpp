#include "laserprog/types.hpp"

namespace laserprog {

std::string to_string(Kind k) {
  switch (k) {
    case Kind::normal: return "normal";
    case Kind::gradual: return "gradual";
    case Kind::sudden: return "sudden";
  }
  throw DataError("unknown kind");
}

std::string to_string(Label l) {
  return l == Label::normal ? "normal" : "degraded";
}

Kind kind_from_string(std::string_view s) {
  if (s == "normal") return Kind::normal;
  if (s == "gradual") return Kind::gradual;
  if (s == "sudden") return Kind::sudden;
  throw DataError("unknown kind '" + std::string(s) + "'");
}

Label label_from_string(std::string_view s) {
  if (s == "normal") return Label::normal;
  if (s == "degraded") return Label::degraded;
  throw DataError("unknown label '" + std::string(s) + "'");
}

}  // namespace laserprog
