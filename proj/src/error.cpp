#include "t4c/error.hpp"

namespace t4c {

int exit_code(const std::exception& e) noexcept {
    if (dynamic_cast<const FormatError*>(&e)) return 3;
    if (dynamic_cast<const ShapeError*>(&e)) return 4;
    if (dynamic_cast<const ConfigError*>(&e)) return 5;
    if (dynamic_cast<const AlignmentError*>(&e)) return 6;
    if (dynamic_cast<const ProtocolError*>(&e)) return 7;
    if (dynamic_cast<const IoError*>(&e)) return 8;
    if (dynamic_cast<const BoundsError*>(&e)) return 9;
    if (dynamic_cast<const StageError*>(&e)) return 10;
    return 1;
}

}  // namespace t4c
