#include "gnar/error.hpp"

namespace gnar {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::DataIntegrity: return "DataIntegrity";
    case ErrorKind::ModelInadmissible: return "ModelInadmissible";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::UndefinedStatistic: return "UndefinedStatistic";
    case ErrorKind::SelectionFailed: return "SelectionFailed";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace gnar
