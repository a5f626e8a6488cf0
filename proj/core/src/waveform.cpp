#include "csmaq/waveform.hpp"

namespace csmaq {

std::vector<double> Waveform::mono_mix() const {
    std::vector<double> mix(length(), 0.0);
    if (channels.empty()) return mix;
    const double w = 1.0 / static_cast<double>(channels.size());
    for (const auto& ch : channels)
        for (std::size_t i = 0; i < ch.size(); ++i) mix[i] += w * ch[i];
    return mix;
}

}  // namespace csmaq
