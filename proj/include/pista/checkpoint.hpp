#pragma once

// Versioned binary checkpoints:
//   "PISENSE1" | u64 LE header length | UTF-8 JSON header | f64 LE payload
// The payload holds the network parameters in declaration order, followed by the Adam first
// and second moments in the same order.

#include <pista/array_io.hpp>
#include <pista/training.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace pista {

inline constexpr char checkpoint_magic[] = "PISENSE1";
inline constexpr int checkpoint_version = 1;

struct Checkpoint {
    NetworkParams params;
    AdamState state;
    std::optional<TrainConfig> config;
};

namespace detail {

inline nlohmann::json config_to_json(const TrainConfig& c)
{
    return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},           {"beta2", c.beta2},
            {"epsilon", c.epsilon},             {"epochs", c.epochs},         {"batch_size", c.batch_size},
            {"seed", c.seed},                   {"variant", to_string(c.variant)}};
}

inline TrainConfig config_from_json(const nlohmann::json& j, const NetworkShape& shape)
{
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.shape = shape;
    return c;
}

} // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params, const AdamState& state,
                            const std::optional<TrainConfig>& config = std::nullopt)
{
    params.validate();
    NetworkParams p = params;
    AdamState s = state;
    auto pt = parameter_tensors(p);
    auto mt = parameter_tensors(s.m);
    auto vt = parameter_tensors(s.v);
    detail::require_congruent(pt, mt, "save_checkpoint (first moments)");
    detail::require_congruent(pt, vt, "save_checkpoint (second moments)");

    const NetworkShape shape = params.shape();
    nlohmann::json header = {
        {"format_version", checkpoint_version},
        {"variant", to_string(params.variant)},
        {"activation", params.activation == Activation::Relu ? "relu" : "identity"},
        {"shape",
         {{"blocks", shape.blocks}, {"layers", shape.layers}, {"channels", shape.channels}, {"kernel", shape.kernel}}},
        {"adam_step", state.step},
        {"parameter_count", parameter_count(params)},
    };
    if (config) header["config"] = detail::config_to_json(*config);
    const std::string text = header.dump();

    std::string bytes(checkpoint_magic, 8);
    const std::uint64_t len = detail::to_little(static_cast<std::uint64_t>(text.size()));
    bytes.append(reinterpret_cast<const char*>(&len), 8);
    bytes += text;
    for (auto* tensors : {&pt, &mt, &vt})
        for (const auto& t : *tensors)
            for (double v : t.values) detail::append_le(bytes, v);
    detail::write_file(path, bytes);
}

/// Loads a checkpoint; with expected_shape set, a differing stored layout raises ShapeError.
inline Checkpoint load_checkpoint(const std::filesystem::path& path,
                                  const std::optional<NetworkShape>& expected_shape = std::nullopt)
{
    const std::string bytes = detail::read_file(path);
    if (bytes.size() < 16 || bytes.compare(0, 8, checkpoint_magic, 8) != 0)
        throw FormatError(path.string() + ": not a checkpoint (bad magic or truncated preamble)");
    std::uint64_t len;
    std::memcpy(&len, bytes.data() + 8, 8);
    len = detail::to_little(len);
    if (len > bytes.size() - 16) throw TruncationError(path.string() + ": checkpoint header truncated");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(16, len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
    }

    Checkpoint ck;
    try {
        if (header.at("format_version").get<int>() != checkpoint_version)
            throw VersionError(path.string() + ": unsupported checkpoint version " +
                               header.at("format_version").dump());
        const auto& js = header.at("shape");
        const NetworkShape shape{js.at("blocks").get<int>(), js.at("layers").get<int>(), js.at("channels").get<int>(),
                                 js.at("kernel").get<int>()};
        shape.validate();
        if (expected_shape && !(*expected_shape == shape))
            throw ShapeError(path.string() + ": checkpoint holds " + std::to_string(shape.blocks) + " blocks, " +
                             std::to_string(shape.layers) + " layers, " + std::to_string(shape.channels) +
                             " channels, kernel " + std::to_string(shape.kernel) + "; a different layout was requested");
        ck.params = NetworkParams::zeros(shape, parse_variant(header.at("variant").get<std::string>()));
        ck.params.activation =
            header.at("activation").get<std::string>() == "identity" ? Activation::Identity : Activation::Relu;
        ck.state = AdamState::zeros_like(ck.params);
        ck.state.step = header.at("adam_step").get<std::int64_t>();
        if (header.contains("config")) ck.config = detail::config_from_json(header.at("config"), shape);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(path.string() + ": invalid checkpoint header: " + e.what());
    }

    auto pt = parameter_tensors(ck.params);
    auto mt = parameter_tensors(ck.state.m);
    auto vt = parameter_tensors(ck.state.v);
    const std::size_t count = parameter_count(ck.params);
    const std::size_t payload = bytes.size() - 16 - len;
    if (payload != 3 * count * 8)
        throw TruncationError(path.string() + ": checkpoint payload has " + std::to_string(payload) +
                              " bytes, expected " + std::to_string(3 * count * 8));
    const char* cursor = bytes.data() + 16 + len;
    for (auto* tensors : {&pt, &mt, &vt})
        for (auto& t : *tensors)
            for (double& v : t.values) {
                v = detail::read_le(cursor);
                cursor += 8;
            }
    return ck;
}

/// Save followed by load.
inline Checkpoint checkpoint_roundtrip(const NetworkParams& params, const AdamState& state,
                                       const std::filesystem::path& path)
{
    save_checkpoint(path, params, state);
    return load_checkpoint(path, params.shape());
}

} // namespace pista
