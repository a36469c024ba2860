// Model core: dynamic biases, the three energy variants, block conditionals
// and serialization, pinned against hand-derived values.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <catch2/catch_amalgamated.hpp>

#include "dcrbm/model.hpp"
#include "dcrbm/model_io.hpp"
#include "dcrbm/training.hpp"
#include "support.hpp"

using namespace dcrbm;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("config validation rejects degenerate dimensions") {
  ModelConfig config = support::tiny_config();
  CHECK_NOTHROW(config.validate());

  config.visible = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = support::tiny_config();
  config.hidden = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = support::tiny_config();
  config.history = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  CHECK(support::tiny_config().history_dim() == 2);
}

TEST_CASE("dynamic biases follow the autoregressive form") {
  const ModelConfig config = support::tiny_config();

  SECTION("zero autoregressive weights leave the static biases") {
    ModelParams params = support::tiny_params();
    params.past_to_visible.setZero();
    params.past_to_hidden.setZero();
    const DynamicBiases bias = dynamic_biases(config, params, support::tiny_history());
    CHECK(bias.visible == params.visible_bias);
    CHECK(bias.hidden == params.hidden_bias);
  }

  SECTION("zero history leaves the static biases") {
    const ModelParams params = support::tiny_params();
    const DynamicBiases bias =
        dynamic_biases(config, params, support::zero_history(config));
    CHECK(bias.visible == params.visible_bias);
    CHECK(bias.hidden == params.hidden_bias);
  }

  SECTION("scalar hand evaluation") {
    ModelConfig one;
    one.visible = 1;
    one.hidden = 1;
    one.labels = 2;
    one.history = 1;
    ModelParams params = zero_params(one);
    params.visible_bias[0] = 0.5;
    params.past_to_visible(0, 0) = 2.0;
    HistoryWindow history;
    history.values.resize(1);
    history.values << 3.0;
    const DynamicBiases bias = dynamic_biases(one, params, history);
    CHECK(bias.visible[0] == 6.5);
  }

  SECTION("full hand evaluation") {
    const DynamicBiases bias =
        dynamic_biases(config, support::tiny_params(), support::tiny_history());
    CHECK_THAT(bias.visible[0], WithinAbs(0.19, 1e-15));
    CHECK_THAT(bias.visible[1], WithinAbs(-0.06, 1e-15));
    CHECK_THAT(bias.hidden[0], WithinAbs(0.26, 1e-15));
    CHECK_THAT(bias.hidden[1], WithinAbs(-0.14, 1e-15));
  }

  SECTION("history length is checked") {
    HistoryWindow bad;
    bad.values = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(dynamic_biases(config, support::tiny_params(), bad),
                    std::invalid_argument);
  }
}

TEST_CASE("energy matches hand-evaluated forms") {
  Eigen::VectorXd h10(2);
  h10 << 1.0, 0.0;

  SECTION("zero parameters") {
    const ModelConfig binary = support::tiny_config(UnitKind::Binary);
    const ModelParams params = zero_params(binary);
    const Frame v = make_frame(binary, Eigen::Vector2d(1.0, 0.0));
    CHECK(energy(binary, params, v, h10, support::zero_history(binary)) == 0.0);

    const ModelConfig real = support::tiny_config(UnitKind::Real);
    const Frame vr = make_frame(real, Eigen::Vector2d(0.5, -1.5));
    CHECK_THAT(energy(real, zero_params(real), vr, h10, support::zero_history(real)),
               WithinAbs(1.25, 1e-15));
  }

  SECTION("binary interaction term") {
    ModelConfig config;
    config.visible = 2;
    config.hidden = 1;
    config.units = UnitKind::Binary;
    ModelParams params = zero_params(config);
    params.weights.setConstant(0.1);
    const Frame v = make_frame(config, Eigen::Vector2d(1.0, 1.0));
    Eigen::VectorXd h(1);
    h << 1.0;
    CHECK_THAT(energy(config, params, v, h, support::zero_history(config)),
               WithinAbs(-0.2, 1e-15));
  }

  SECTION("count variant includes the log factorial") {
    ModelConfig config;
    config.visible = 1;
    config.hidden = 1;
    config.units = UnitKind::Count;
    ModelParams params = zero_params(config);
    params.visible_bias[0] = 1.0;
    Frame v;
    v.values.resize(1);
    v.values << 3.0;
    v.total = 3.0;
    Eigen::VectorXd h(1);
    h << 0.0;
    CHECK_THAT(energy(config, params, v, h, support::zero_history(config)),
               WithinAbs(-1.208240530771945, 1e-12));
  }

  SECTION("fixed model, all three kinds") {
    const ModelParams params = support::tiny_params();
    const HistoryWindow history = support::tiny_history();

    const ModelConfig count = support::tiny_config(UnitKind::Count);
    CHECK_THAT(energy(count, params, support::count_frame(), h10, history),
               WithinAbs(0.37175946922805525, 1e-12));

    const ModelConfig real = support::tiny_config(UnitKind::Real);
    const Frame vr = make_frame(real, Eigen::Vector2d(0.5, -1.5));
    CHECK_THAT(energy(real, params, vr, h10, history),
               WithinAbs(0.7998499999999998, 1e-12));

    const ModelConfig binary = support::tiny_config(UnitKind::Binary);
    const Frame vb = make_frame(binary, Eigen::Vector2d(1.0, 0.0));
    CHECK_THAT(energy(binary, params, vb, h10, history),
               WithinAbs(-0.65, 1e-12));
  }
}

TEST_CASE("discriminative energy shifts by the label couplings") {
  const ModelConfig config = support::tiny_config();
  const HistoryWindow history = support::tiny_history();
  const Frame v = support::count_frame();
  Eigen::VectorXd h10(2);
  h10 << 1.0, 0.0;

  SECTION("zero couplings reduce to the generative energy") {
    ModelParams params = support::tiny_params();
    params.label_weights.setZero();
    params.label_bias.setZero();
    const double base = energy(config, params, v, h10, history);
    CHECK(discriminative_energy(config, params, v, h10, Label{0, 2}, history) == base);
    CHECK(discriminative_energy(config, params, v, h10, Label{1, 2}, history) == base);
  }

  SECTION("label bias shifts the energy") {
    ModelParams params = support::tiny_params();
    params.label_weights.setZero();
    params.label_bias << 0.2, 0.0;
    const double base = energy(config, params, v, h10, history);
    CHECK_THAT(discriminative_energy(config, params, v, h10, Label{0, 2}, history),
               WithinAbs(base - 0.2, 1e-15));
  }

  SECTION("active hidden unit picks up its label weight") {
    ModelConfig one;
    one.visible = 2;
    one.hidden = 1;
    one.units = UnitKind::Count;
    ModelParams params = zero_params(one);
    params.label_weights(0, 1) = 0.3;
    Eigen::VectorXd h(1);
    h << 1.0;
    const Frame vc = make_frame(one, Eigen::Vector2d(1.0, 0.0));
    const double base = energy(one, params, vc, h, support::zero_history(one));
    CHECK_THAT(discriminative_energy(one, params, vc, h, Label{1, 2},
                                     support::zero_history(one)),
               WithinAbs(base - 0.3, 1e-15));
  }

  SECTION("fixed model hand value") {
    CHECK_THAT(discriminative_energy(config, support::tiny_params(), v, h10,
                                     Label{1, 2}, history),
               WithinAbs(0.6217594692280553, 1e-12));
  }

  SECTION("label class count must match") {
    CHECK_THROWS_AS(discriminative_energy(config, support::tiny_params(), v, h10,
                                          Label{0, 3}, history),
                    std::invalid_argument);
  }
}

TEST_CASE("hidden conditional") {
  SECTION("all-zero parameters give 1/2 everywhere") {
    const ModelConfig config = support::tiny_config(UnitKind::Binary);
    const Frame v = make_frame(config, Eigen::Vector2d(1.0, 0.0));
    const Eigen::VectorXd p =
        hidden_prob(config, zero_params(config), v, support::zero_history(config));
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
  }

  SECTION("unit effective bias gives sigma(1)") {
    const ModelConfig config = support::tiny_config(UnitKind::Binary);
    ModelParams params = zero_params(config);
    params.hidden_bias.setConstant(1.0);
    const Frame v = make_frame(config, Eigen::Vector2d(0.0, 0.0));
    const Eigen::VectorXd p =
        hidden_prob(config, params, v, support::zero_history(config));
    CHECK_THAT(p[0], WithinAbs(0.7310585786300049, 1e-15));
  }

  SECTION("fixed model, with and without a label") {
    const ModelConfig config = support::tiny_config();
    const Eigen::VectorXd with_label =
        hidden_prob(config, support::tiny_params(), support::count_frame(),
                    support::tiny_history(), Label{0, 2});
    CHECK_THAT(with_label[0], WithinAbs(0.7702989490466019, 1e-14));
    CHECK_THAT(with_label[1], WithinAbs(0.44028635073280703, 1e-14));

    const Eigen::VectorXd without =
        hidden_prob(config, support::tiny_params(), support::count_frame(),
                    support::tiny_history());
    CHECK_THAT(without[0], WithinAbs(0.7130001627522816, 1e-14));
    CHECK_THAT(without[1], WithinAbs(0.4650570548417855, 1e-14));
  }
}

TEST_CASE("visible conditional") {
  SECTION("symmetric count model spreads the total evenly") {
    ModelConfig config;
    config.visible = 4;
    config.hidden = 2;
    config.units = UnitKind::Count;
    const Eigen::VectorXd rates =
        visible_conditional(config, zero_params(config), Eigen::Vector2d(1.0, 0.0),
                            support::zero_history(config), 8.0);
    for (int i = 0; i < 4; ++i) CHECK_THAT(rates[i], WithinAbs(2.0, 1e-12));
  }

  SECTION("binary zero model gives 1/2") {
    const ModelConfig config = support::tiny_config(UnitKind::Binary);
    const Eigen::VectorXd p =
        visible_conditional(config, zero_params(config), Eigen::Vector2d(0.0, 1.0),
                            support::zero_history(config));
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
  }

  SECTION("log-ratio activations give exact rates") {
    const ModelConfig config = support::tiny_config();
    ModelParams params = zero_params(config);
    params.visible_bias << std::log(3.0), 0.0;
    const Eigen::VectorXd rates =
        visible_conditional(config, params, Eigen::Vector2d(0.0, 0.0),
                            support::zero_history(config), 4.0);
    CHECK_THAT(rates[0], WithinAbs(3.0, 1e-12));
    CHECK_THAT(rates[1], WithinAbs(1.0, 1e-12));
  }

  SECTION("fixed model count rates") {
    const ModelConfig config = support::tiny_config();
    const Eigen::VectorXd rates =
        visible_conditional(config, support::tiny_params(), Eigen::Vector2d(1.0, 0.0),
                            support::tiny_history(), 4.0);
    CHECK_THAT(rates[0], WithinAbs(2.394750640449808, 1e-13));
    CHECK_THAT(rates[1], WithinAbs(1.605249359550192, 1e-13));
    CHECK_THAT(rates.sum(), WithinAbs(4.0, 1e-12));
  }

  SECTION("zero total pins count rates at zero") {
    const ModelConfig config = support::tiny_config();
    const Eigen::VectorXd rates =
        visible_conditional(config, support::tiny_params(), Eigen::Vector2d(1.0, 1.0),
                            support::tiny_history(), 0.0);
    CHECK(rates.isZero(0.0));
  }

  SECTION("real units return the mean") {
    const ModelConfig config = support::tiny_config(UnitKind::Real);
    const Eigen::VectorXd mean =
        visible_conditional(config, support::tiny_params(), Eigen::Vector2d(1.0, 0.0),
                            support::tiny_history());
    CHECK_THAT(mean[0], WithinAbs(0.39, 1e-15));
    CHECK_THAT(mean[1], WithinAbs(-0.01, 1e-15));
  }
}

TEST_CASE("label conditional") {
  SECTION("zero couplings give the uniform distribution") {
    const ModelConfig config = support::tiny_config();
    const Eigen::VectorXd p =
        label_prob(config, zero_params(config), Eigen::Vector2d(0.3, 0.9));
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
  }

  SECTION("softmax is shift invariant") {
    ModelConfig config = support::tiny_config();
    config.labels = 3;
    ModelParams params = zero_params(config);
    params.label_bias.setConstant(1.0 + 7.25);
    const Eigen::VectorXd p =
        label_prob(config, params, Eigen::Vector2d(0.0, 0.0));
    for (int l = 0; l < 3; ++l) CHECK_THAT(p[l], WithinAbs(1.0 / 3.0, 1e-15));
  }

  SECTION("two-class softmax is the sigmoid of the difference") {
    const ModelConfig config = support::tiny_config();
    ModelParams params = zero_params(config);
    params.label_bias << 1.0, 0.0;
    const Eigen::VectorXd p =
        label_prob(config, params, Eigen::Vector2d(0.0, 0.0));
    CHECK_THAT(p[0], WithinAbs(0.7310585786300049, 1e-15));
    CHECK_THAT(p[1], WithinAbs(0.2689414213699951, 1e-15));
  }

  SECTION("fixed model with mean-field hidden probabilities") {
    const ModelConfig config = support::tiny_config();
    const Eigen::VectorXd h =
        hidden_prob(config, support::tiny_params(), support::count_frame(),
                    support::tiny_history());
    const Eigen::VectorXd p = label_prob(config, support::tiny_params(), h);
    CHECK_THAT(p[0], WithinAbs(0.5842478047282887, 1e-14));
    CHECK_THAT(p[1], WithinAbs(0.41575219527171137, 1e-14));
  }
}

TEST_CASE("frame validation enforces the unit kind") {
  SECTION("count frames are nonnegative integers") {
    const ModelConfig config = support::tiny_config();
    CHECK_THROWS_AS(make_frame(config, Eigen::Vector2d(-1.0, 0.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_frame(config, Eigen::Vector2d(1.5, 0.0)),
                    std::invalid_argument);
    const Frame ok = make_frame(config, Eigen::Vector2d(3.0, 1.0));
    CHECK(ok.total == 4.0);
  }

  SECTION("binary frames are 0/1") {
    const ModelConfig config = support::tiny_config(UnitKind::Binary);
    CHECK_THROWS_AS(make_frame(config, Eigen::Vector2d(2.0, 0.0)),
                    std::invalid_argument);
    CHECK_NOTHROW(make_frame(config, Eigen::Vector2d(1.0, 0.0)));
  }

  SECTION("real frames must be finite") {
    const ModelConfig config = support::tiny_config(UnitKind::Real);
    Eigen::Vector2d bad(std::nan(""), 0.0);
    CHECK_THROWS_AS(make_frame(config, bad), std::invalid_argument);
  }

  SECTION("size mismatch is rejected") {
    const ModelConfig config = support::tiny_config();
    Eigen::VectorXd three = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(make_frame(config, three), std::invalid_argument);
  }
}

TEST_CASE("initialize_params is seeded and bounded") {
  ModelConfig config;
  config.visible = 3;
  config.hidden = 5;
  config.labels = 2;
  config.history = 2;

  const ModelParams a = initialize_params(config, 11);
  const ModelParams b = initialize_params(config, 11);
  const ModelParams c = initialize_params(config, 12);

  CHECK(a.weights == b.weights);
  CHECK(a.past_to_hidden == b.past_to_hidden);
  CHECK(a.weights != c.weights);

  CHECK(a.visible_bias.isZero(0.0));
  CHECK(a.hidden_bias.isZero(0.0));
  CHECK(a.label_bias.isZero(0.0));
  CHECK(a.weights.cwiseAbs().maxCoeff() < 0.01);
  CHECK(a.past_to_visible.rows() == 6);
  CHECK(a.past_to_visible.cols() == 3);
  CHECK(a.label_weights.rows() == 5);
  CHECK(a.label_weights.cols() == 2);
}

TEST_CASE("model files round-trip exactly") {
  ModelFile model;
  model.config = support::tiny_config();
  model.params = support::tiny_params();
  model.metadata = {{"trace", "demo.csv"}, {"window", 128}};

  SECTION("through json") {
    const ModelFile back = model_from_json(model_to_json(model));
    CHECK(back.config.visible == 2);
    CHECK(back.config.units == UnitKind::Count);
    CHECK(back.params.weights == model.params.weights);
    CHECK(back.params.past_to_visible == model.params.past_to_visible);
    CHECK(back.params.label_bias == model.params.label_bias);
    CHECK(back.metadata.at("window") == 128);
  }

  SECTION("through a file") {
    const auto path = std::filesystem::temp_directory_path() / "dcrbm_io_test.json";
    save_model(model, path.string());
    const ModelFile back = load_model(path.string());
    CHECK(back.params.weights == model.params.weights);
    CHECK(back.params.hidden_bias == model.params.hidden_bias);
    std::filesystem::remove(path);
  }
}

TEST_CASE("model files are validated on load") {
  ModelFile model;
  model.config = support::tiny_config();
  model.params = support::tiny_params();

  SECTION("format tag") {
    nlohmann::json doc = model_to_json(model);
    doc["format"] = "something-else";
    CHECK_THROWS_AS(model_from_json(doc), std::invalid_argument);
  }

  SECTION("format version") {
    nlohmann::json doc = model_to_json(model);
    doc["format_version"] = kModelFormatVersion + 1;
    CHECK_THROWS_AS(model_from_json(doc), std::invalid_argument);
  }

  SECTION("tensor shape") {
    nlohmann::json doc = model_to_json(model);
    doc["params"]["weights"].erase(0);
    CHECK_THROWS_WITH(model_from_json(doc), ContainsSubstring("weights"));
  }

  SECTION("unparseable file") {
    const auto path = std::filesystem::temp_directory_path() / "dcrbm_io_garbage.json";
    std::ofstream(path) << "not a model";
    CHECK_THROWS_AS(load_model(path.string()), std::invalid_argument);
    std::filesystem::remove(path);
  }
}
