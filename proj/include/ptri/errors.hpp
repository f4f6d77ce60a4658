#pragma once

#include <stdexcept>
#include <string>

namespace ptri {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// geometry
struct NearSingularHomography : Error {
  using Error::Error;
};
struct CenterProjection : Error {
  using Error::Error;
};
struct LineInPlane : Error {
  using Error::Error;
};

// chart / objective
struct ChartSingularity : Error {
  ChartSingularity(int view_index, const std::string& what)
      : Error(what), view(view_index) {}
  int view;  // view whose dehomogenization denominator vanished
};

// polynomial system solving
struct SingularJacobian : Error {
  using Error::Error;
};
struct TrackingStalled : Error {
  using Error::Error;
};

// triangulation
struct NoRealSolution : Error {
  using Error::Error;
};
struct SolverIncomplete : Error {
  using Error::Error;
};
struct LocalSearchFailed : Error {
  using Error::Error;
};
struct DegenerateGeometry : Error {
  using Error::Error;
};

// analysis
struct InvalidViewCount : Error {
  using Error::Error;
};
struct UnderdeterminedFit : Error {
  using Error::Error;
};

// bench
struct GenericitySamplingFailed : Error {
  using Error::Error;
};
struct ZeroNoiseMetric : Error {
  using Error::Error;
};

// pipeline
struct IdenticalCenters : Error {
  using Error::Error;
};
struct DegenerateSample : Error {
  using Error::Error;
};
struct InsufficientInput : Error {
  using Error::Error;
};
struct SceneParseError : Error {
  using Error::Error;
};

}  // namespace ptri
