#include "swct/evalkit/dice.hpp"

namespace swct::evalkit {

namespace {

DiceResult finish(std::size_t inter, std::size_t a, std::size_t b) {
  DiceResult r;
  r.intersection = inter;
  r.a_voxels = a;
  r.b_voxels = b;
  r.both_empty = a + b == 0;
  r.dice = r.both_empty ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
  return r;
}

}  // namespace

DiceResult dice(const volcore::Mask& a, const volcore::Mask& b) {
  volcore::require_same_geometry(a.geometry(), b.geometry(), "dice operands");
  const auto va = a.voxels();
  const auto vb = b.voxels();
  std::size_t na = 0, nb = 0, inter = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const bool x = va[i] != 0, y = vb[i] != 0;
    na += x;
    nb += y;
    inter += x && y;
  }
  return finish(inter, na, nb);
}

DiceResult dice_region(const volcore::LabelMap& gt, const volcore::LabelMap& pred, volcore::RegionCode r) {
  volcore::require_same_geometry(gt.geometry(), pred.geometry(), "dice operands");
  const auto code = static_cast<std::uint8_t>(r);
  const auto va = gt.voxels();
  const auto vb = pred.voxels();
  std::size_t na = 0, nb = 0, inter = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const bool x = va[i] == code, y = vb[i] == code;
    na += x;
    nb += y;
    inter += x && y;
  }
  return finish(inter, na, nb);
}

}  // namespace swct::evalkit
