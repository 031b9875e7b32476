#pragma once

#include <cstdint>
#include <string_view>

namespace seth {

/// One mode per instant: the single antenna is wired to exactly one of the
/// harvester, the transmitter or the receiver front end.
enum class Mode : std::uint8_t { Off, Harvest, Listen, TxPreamble, ArbCheck, TxFrame, RxFrame, Sense };

std::string_view to_string(Mode m) noexcept;

/// Load currents in amperes.
struct LoadCurrents {
  double off = 0.3e-6;
  double harvest = 1.82e-6;
  double listen = 1.82e-6;
  double tx = 5.32e-3;
  double rx = 501.8e-6;
  double sense = 501.8e-6;

  double for_mode(Mode m) const noexcept;
};

/// True for the modes in which the antenna feeds the harvester.
constexpr bool harvests(Mode m) noexcept { return m == Mode::Off || m == Mode::Harvest; }

}  // namespace seth
