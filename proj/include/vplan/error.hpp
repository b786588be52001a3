#pragma once

#include <stdexcept>
#include <string>

namespace vplan {

// Two families so batch drivers can tell bad input apart from bad geometry.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

#define VPLAN_DEFINE_ERROR(Name, Base)      \
  class Name : public Base {                \
   public:                                  \
    using Base::Base;                       \
  };

VPLAN_DEFINE_ERROR(ParallelPlanes, GeometryError)
VPLAN_DEFINE_ERROR(LineNotInPlane, GeometryError)
VPLAN_DEFINE_ERROR(EmptyIntersection, GeometryError)
VPLAN_DEFINE_ERROR(DegenerateGeometry, GeometryError)

VPLAN_DEFINE_ERROR(InvariantViolation, ValidationError)
VPLAN_DEFINE_ERROR(SchemaError, ValidationError)
VPLAN_DEFINE_ERROR(MissingView, ValidationError)
VPLAN_DEFINE_ERROR(ShapeMismatch, ValidationError)
VPLAN_DEFINE_ERROR(SearchSpaceTooLarge, ValidationError)
VPLAN_DEFINE_ERROR(SingleSourceView, ValidationError)
VPLAN_DEFINE_ERROR(EmptyGroup, ValidationError)
VPLAN_DEFINE_ERROR(BadMagic, ValidationError)
VPLAN_DEFINE_ERROR(TruncatedPayload, ValidationError)
VPLAN_DEFINE_ERROR(NonFiniteValue, ValidationError)

#undef VPLAN_DEFINE_ERROR

}  // namespace vplan
