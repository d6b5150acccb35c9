"""Invariant suites run by ``softgrad verify``.

Every check reduces to a measured value and a tolerance, a check passes when
the value is finite and not above the tolerance. Statistical checks express
their deviation in standard errors.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from dataclasses_jsonschema import JsonSchemaMixin
from scipy import integrate, stats

from softgrad.agent import actor_gradient
from softgrad.critic import SoftQ, backup_targets
from softgrad.data.common import Activation, Direction
from softgrad.data.config import AdamConfig
from softgrad.exceptions import ConfigurationError, NumericError
from softgrad.gradcheck import central_difference, violation
from softgrad.logging import get_logger
from softgrad.nn import (
    Gradient,
    LayerGradient,
    MlpParams,
    adam_step,
    backward,
    clip_by_global_norm,
    forward,
    global_norm,
    polyak_update,
)
from softgrad.policy import GaussianPolicy, gaussian_entropy, gaussian_log_prob
from softgrad_oracle.exact import (
    classical_policy_gradient,
    discounted_occupancy,
    exact_objective,
    exact_policy_gradient,
    exact_soft_q,
    finite_difference_gradient,
    gradient_ascent,
    objective_from_q,
    occupancy_series,
    policy_evaluation,
    soft_backup,
    soft_bellman_residual,
)
from softgrad_oracle.mdp import SoftmaxPolicy, TabularMdp, TabularQ, builtin_fixture, random_mdp, random_policy
from softgrad_oracle.sampling import double_sampled_gradient, mc_gradient_estimate, sampled_backups

logger = get_logger(__name__)

GAMMAS = (0.8, 0.9, 0.99)
TAUS = (0.0, 0.5, 2.0)

NETWORK_STEP = 1e-5
RELU_MARGIN = 1e-4


@dataclass
class CheckResult(JsonSchemaMixin):
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.value) and self.value <= self.tolerance

    def line(self) -> str:
        return f"{self.name}: {self.value:.3e} <= {self.tolerance:.3e} {'PASS' if self.passed else 'FAIL'}"


Suite = Callable[[np.random.Generator], list[CheckResult]]


def _max_z(estimate: np.ndarray | float, expected: np.ndarray | float, standard_error: np.ndarray | float) -> float:
    diff = np.abs(np.asarray(estimate) - np.asarray(expected))
    se = np.asarray(standard_error)

    # a coordinate without variance has to match exactly
    z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 0, np.inf, 0.0))
    return float(np.max(z))


def _mean_and_se(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return samples.mean(axis=0), samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])


def _random_tabular(
    rng: np.random.Generator, gamma: float, max_states: int = 10, max_actions: int = 5
) -> tuple[TabularMdp, SoftmaxPolicy]:
    s, a = int(rng.integers(2, max_states + 1)), int(rng.integers(2, max_actions + 1))
    return random_mdp(s, a, gamma, rng), random_policy(s, a, rng)


def _relu_margin(params: MlpParams, x: np.ndarray) -> float:
    """Smallest distance of a ReLU pre-activation from its kink."""

    _, tape = forward(params, x)
    margins = [
        float(np.min(np.abs(inp @ layer.weight.T + layer.bias)))
        for layer, inp in zip(params.layers, tape.inputs)
        if layer.activation == Activation.RELU
    ]
    return min(margins, default=math.inf)


def _smooth_point(params: MlpParams, rng: np.random.Generator, rows: int = 0, tries: int = 1000) -> np.ndarray:
    """Uniform input in [-1, 1] (a single vector, or ``rows`` of them) away from
    ReLU kinks."""

    shape = (rows, params.in_dim) if rows else (params.in_dim,)

    for _ in range(tries):
        x = rng.uniform(-1.0, 1.0, shape)
        if _relu_margin(params, x) > RELU_MARGIN:
            return x

    raise NumericError("Failed to find an input away from ReLU kinks.")


def _random_network(rng: np.random.Generator, out_activation: Activation) -> MlpParams:
    sizes = (int(rng.integers(1, 5)), int(rng.integers(1, 65)), int(rng.integers(1, 65)), int(rng.integers(1, 4)))
    params = MlpParams.create(sizes, [Activation.RELU, Activation.RELU, out_activation], rng)

    # non-zero biases, so that kinks are not all at the origin
    for layer in params.layers:
        layer.bias = rng.uniform(-0.5, 0.5, layer.out_dim)

    return params


# --- tabular gradient and value identities -------------------------------------------------------------------------


def _proposition_trials(rng: np.random.Generator, trials: int = 108) -> CheckResult:
    worst = 0.0

    for idx in range(trials):
        gamma, tau = GAMMAS[idx % 3], TAUS[(idx // 3) % 3]
        mdp, policy = _random_tabular(rng, gamma)
        fd = finite_difference_gradient(mdp, policy, tau, h=1e-3, stencil=5)
        worst = max(worst, violation(exact_policy_gradient(mdp, policy, tau), fd))

    return CheckResult(f"soft policy gradient vs finite differences ({trials} MDPs), error/tolerance", worst, 1.0)


def _tied_logit(rng: np.random.Generator) -> CheckResult:
    # logits (x/2, -x/2) give pi_0 = sigmoid(x)
    gamma, tau = 0.9, float(rng.uniform(0.1, 2.0))
    r0, r1 = (float(r) for r in rng.uniform(-1.0, 1.0, 2))
    mdp = TabularMdp([[[1.0], [1.0]]], [[r0, r1]], gamma, [1.0])
    worst = 0.0

    for x in rng.uniform(-3.0, 3.0, 10):
        sig = 1.0 / (1.0 + math.exp(-x))
        expected = sig * (1 - sig) * (r0 - r1 - tau * x) / (1 - gamma)

        fd = finite_difference_gradient(mdp, SoftmaxPolicy([[x / 2, -x / 2]]), tau)
        worst = max(worst, violation(np.array([expected]), np.array([0.5 * (fd[0, 0] - fd[0, 1])])))

    return CheckResult("tied-logit finite differences vs closed form, error/tolerance", worst, 1.0)


def _bellman_residual(rng: np.random.Generator) -> CheckResult:
    worst = 0.0

    for gamma in GAMMAS:
        for tau in TAUS:
            for _ in range(3):
                mdp, policy = _random_tabular(rng, gamma, max_states=20)
                worst = max(worst, soft_bellman_residual(mdp, policy, tau, exact_soft_q(mdp, policy, tau)))

    return CheckResult("soft Bellman residual of the exact soft Q", worst, 1e-10)


def _occupancy(rng: np.random.Generator) -> CheckResult:
    worst = 0.0

    for gamma in (0.8, 0.9):
        for _ in range(10):
            mdp, policy = _random_tabular(rng, gamma, max_states=20)
            diff = occupancy_series(mdp, policy, 500) - discounted_occupancy(mdp, policy)
            worst = max(worst, float(np.max(np.abs(diff))))

    return CheckResult("occupancy solve vs 500-term series", worst, 1e-8)


def _objective_forms(rng: np.random.Generator) -> CheckResult:
    worst = 0.0

    for gamma in (0.8, 0.9):
        for tau in TAUS:
            for _ in range(5):
                mdp, policy = _random_tabular(rng, gamma)
                worst = max(worst, abs(exact_objective(mdp, policy, tau) - objective_from_q(mdp, policy, tau)))

    return CheckResult("occupancy and soft Q forms of the objective", worst, 1e-10)


def _zero_temperature(rng: np.random.Generator) -> list[CheckResult]:
    worst_q = worst_grad = 0.0

    for _ in range(10):
        mdp, policy = _random_tabular(rng, 0.9)
        q = exact_soft_q(mdp, policy, 0.0)
        worst_q = max(worst_q, float(np.max(np.abs(q - policy_evaluation(mdp, policy).action_values))))

        grad = exact_policy_gradient(mdp, policy, 0.0) - classical_policy_gradient(mdp, policy)
        worst_grad = max(worst_grad, float(np.max(np.abs(grad))))

    return [
        CheckResult("zero temperature soft Q vs policy evaluation", worst_q, 1e-10),
        CheckResult("zero temperature gradient vs policy gradient theorem", worst_grad, 1e-10),
    ]


def _ascent(rng: np.random.Generator) -> CheckResult:
    mdp = random_mdp(4, 3, 0.8, rng)
    _, objectives = gradient_ascent(mdp, random_policy(4, 3, rng), 0.5, 0.1, 200)
    worst = float(max(0.0, -np.min(np.diff(objectives))))
    return CheckResult("largest objective decrease over 200 exact ascent steps", worst, 1e-12)


# --- networks ------------------------------------------------------------------------------------------------------


def _network_backward(rng: np.random.Generator, trials: int = 4) -> list[CheckResult]:
    worst_params = worst_inputs = 0.0

    for idx in range(trials):
        params = _random_network(rng, Activation.SIGMOID if idx % 2 else Activation.IDENTITY)
        x = _smooth_point(params, rng)
        cotangent = rng.normal(size=params.out_dim)

        _, tape = forward(params, x)
        grad, input_grad = backward(params, tape, cotangent)

        def by_params(
            theta: np.ndarray, params: MlpParams = params, x: np.ndarray = x, cotangent: np.ndarray = cotangent
        ) -> float:
            return float(forward(params.unflatten(theta), x)[0] @ cotangent)

        def by_inputs(inputs: np.ndarray, params: MlpParams = params, cotangent: np.ndarray = cotangent) -> float:
            return float(forward(params, inputs)[0] @ cotangent)

        fd_params = central_difference(by_params, params.flatten(), NETWORK_STEP)
        fd_inputs = central_difference(by_inputs, x, NETWORK_STEP)

        worst_params = max(worst_params, violation(grad.flatten(), fd_params))
        worst_inputs = max(worst_inputs, violation(input_grad, fd_inputs))

    return [
        CheckResult("network backward vs finite differences (parameters), error/tolerance", worst_params, 1.0),
        CheckResult("network backward vs finite differences (inputs), error/tolerance", worst_inputs, 1.0),
    ]


def _soft_loss_gradient(rng: np.random.Generator) -> CheckResult:
    critic = SoftQ.create(2, 1, (16, 16), rng)
    inputs = _smooth_point(critic.network, rng, rows=8)
    states, actions, targets = inputs[:, :2], inputs[:, 2:], rng.normal(size=8)

    _, grad = critic.soft_loss(states, actions, targets)

    def loss(theta: np.ndarray) -> float:
        perturbed = SoftQ(critic.network.unflatten(theta), critic.target, critic.state_dim)
        return perturbed.soft_loss(states, actions, targets)[0]

    fd = central_difference(loss, critic.network.flatten(), NETWORK_STEP)
    return CheckResult("soft loss gradient vs finite differences, error/tolerance", violation(grad.flatten(), fd), 1.0)


# --- sampled backup ------------------------------------------------------------------------------------------------


def _backup_unbiased(rng: np.random.Generator, count: int = 100_000) -> CheckResult:
    mdp = builtin_fixture("backup_5x3")
    policy = random_policy(mdp.num_states, mdp.num_actions, rng)
    q = rng.normal(size=(mdp.num_states, mdp.num_actions))
    tau = 0.5

    exact = soft_backup(mdp, policy, tau, q)
    worst = 0.0

    for s in range(mdp.num_states):
        for a in range(mdp.num_actions):
            mean, se = _mean_and_se(sampled_backups(mdp, policy, q, tau, s, a, count, 1, rng))
            worst = max(worst, _max_z(mean, exact[s, a], se))

    logger.debug(f"Sampled backups of {mdp.num_states * mdp.num_actions} pairs within {worst:.2f} standard errors.")
    return CheckResult("sampled backup mean vs exact operator (M=1), standard errors", worst, 3.0)


def _backup_variance(rng: np.random.Generator, count: int = 4000) -> CheckResult:
    mdp = builtin_fixture("backup_5x3")
    policy = random_policy(mdp.num_states, mdp.num_actions, rng)
    q = rng.normal(size=(mdp.num_states, mdp.num_actions))
    worst = 0.0

    for next_state in range(mdp.num_states):
        single = sampled_backups(mdp, policy, q, 0.5, 0, 0, count, 1, rng, next_state=next_state)
        many = sampled_backups(mdp, policy, q, 0.5, 0, 0, count, 64, rng, next_state=next_state)
        worst = max(worst, float(many.var(ddof=1) / single.var(ddof=1)))

    return CheckResult("backup variance ratio M=64 / M=1", worst, 1.0 / 32.0)


def _backup_closed_forms() -> list[CheckResult]:
    fixed_point = (1 + 0.9 * math.log(2)) / 0.1
    y = backup_targets(
        np.array([1.0]), np.array([False]), np.full((1, 2), fixed_point), np.full((1, 2), -math.log(2)), 0.9, 1.0
    )

    terminal = backup_targets(np.array([2.0]), np.array([True]), np.array([[7.0]]), np.array([[-1.0]]), 0.9, 1.0)
    myopic = backup_targets(np.array([-0.3]), np.array([False]), np.array([[7.0]]), np.array([[-1.0]]), 0.0, 1.0)

    return [
        CheckResult("backup of the symmetric soft fixed point", abs(float(y[0]) - fixed_point), 1e-10),
        CheckResult("terminal backup equals reward", abs(float(terminal[0]) - 2.0), 0.0),
        CheckResult("undiscounted backup equals reward", abs(float(myopic[0]) + 0.3), 0.0),
    ]


def _backup_exact_q(rng: np.random.Generator) -> CheckResult:
    mdp = builtin_fixture("chain_3x2")
    policy = random_policy(3, 2, rng)
    q = exact_soft_q(mdp, policy, 1.0)
    worst = 0.0

    for s in range(mdp.num_states):
        for a in range(mdp.num_actions):
            mean, se = _mean_and_se(sampled_backups(mdp, policy, q, 1.0, s, a, 50_000, 4, rng))
            worst = max(worst, _max_z(mean, q[s, a], se))

    return CheckResult("sampled backups of the exact soft Q average to it, standard errors", worst, 4.0)


# --- estimators ----------------------------------------------------------------------------------------------------


def _mc_consistency(rng: np.random.Generator) -> CheckResult:
    mdp = builtin_fixture("chain_3x2")
    policy = random_policy(3, 2, rng)
    estimate = mc_gradient_estimate(mdp, policy, 0.5, 1_000_000, rng)
    worst = _max_z(estimate.value, exact_policy_gradient(mdp, policy, 0.5), estimate.standard_error)
    return CheckResult("occupancy sampled gradient (K=1e6) vs exact, standard errors", worst, 4.0)


def _mc_scaling(rng: np.random.Generator) -> CheckResult:
    mdp = builtin_fixture("chain_3x2")
    policy = random_policy(3, 2, rng)

    small = mc_gradient_estimate(mdp, policy, 1.0, 100, rng).standard_error
    large = mc_gradient_estimate(mdp, policy, 1.0, 10_000, rng).standard_error
    ratio = float(np.mean(small) / np.mean(large))

    return CheckResult("standard error ratio K=1e2 / K=1e4, |log2(ratio / 10)|", abs(math.log2(ratio / 10.0)), 1.0)


def _actor_gradient_scaling(rng: np.random.Generator) -> CheckResult:
    policy = GaussianPolicy.create(2, 1, (8, 8), rng)
    critic = SoftQ.create(2, 1, (8, 8), rng)
    states = rng.normal(size=(4, 2))

    def standard_error(count: int) -> np.ndarray:
        estimates = np.array([actor_gradient(policy, critic, states, 2, 1.0, rng).flatten() for _ in range(count)])
        return _mean_and_se(estimates)[1]

    ratio = float(np.mean(standard_error(100)) / np.mean(standard_error(10_000)))

    return CheckResult(
        "actor gradient standard error ratio K=1e2 / K=1e4, |log2(ratio / 10)|", abs(math.log2(ratio / 10.0)), 1.0
    )


def _baseline_constant(rng: np.random.Generator) -> CheckResult:
    worst = 0.0

    for tau in TAUS[1:]:
        for _ in range(10):
            mdp, policy = _random_tabular(rng, 0.9)
            with_constant = exact_policy_gradient(mdp, policy, tau)
            without = exact_policy_gradient(mdp, policy, tau, baseline_constant=False)
            worst = max(worst, float(np.max(np.abs(with_constant - without))))

    return CheckResult("exact gradient without the constant term", worst, 1e-10)


def _double_sampled(rng: np.random.Generator, repeats: int = 50) -> CheckResult:
    mdp = builtin_fixture("chain_3x2")
    policy = random_policy(3, 2, rng)

    estimates = np.array([double_sampled_gradient(mdp, policy, 1.0, 2000, 4, rng) for _ in range(repeats)])
    mean, se = _mean_and_se(estimates)

    return CheckResult(
        "double-sampled actor gradient vs exact, standard errors",
        _max_z(mean, exact_policy_gradient(mdp, policy, 1.0), se),
        4.0,
    )


def _constant_critic(rng: np.random.Generator, count: int = 100_000) -> CheckResult:
    policy = GaussianPolicy.create(2, 1, (8, 8), rng)
    state = _smooth_point(policy.trunk, rng)
    actions, _ = policy.sample_batch(state[None, :], count, rng)

    # with tau = 0 and Q = c every sample contributes c * score
    per_sample = 3.0 * policy.score_grad_per_sample(np.repeat(state[None, :], count, axis=0), actions[0])
    mean, se = _mean_and_se(per_sample)

    return CheckResult("constant critic gradient at zero temperature, standard errors", _max_z(mean, 0.0, se), 4.0)


def _tabular_single_sample(rng: np.random.Generator) -> CheckResult:
    policy = random_policy(3, 2, rng)
    q = rng.normal(size=(3, 2))
    tau = 0.7
    seed = int(rng.integers(0, 2**31))

    estimate = actor_gradient(policy, TabularQ(q), np.array([1]), 1, tau, np.random.default_rng(seed))

    # the estimator draws its single action first, so the same seed reproduces it
    actions, log_probs = policy.sample_batch(np.array([1]), 1, np.random.default_rng(seed))
    action = int(actions[0, 0])

    by_hand = (q[1, action] - tau * log_probs[0, 0] - tau) * policy.score(1, action)
    return CheckResult("single-sample actor gradient vs hand formula", float(np.max(np.abs(estimate - by_hand))), 1e-12)


# --- clipping, Polyak and Adam -------------------------------------------------------------------------------------


def _random_gradient(params: MlpParams, rng: np.random.Generator, scale: float) -> Gradient:
    return Gradient(
        [
            LayerGradient(rng.normal(scale=scale, size=la.weight.shape), rng.normal(scale=scale, size=la.bias.shape))
            for la in params.layers
        ]
    )


def _flat(gradients: list[Gradient]) -> np.ndarray:
    return np.concatenate([g.flatten() for g in gradients])


def _clipping(rng: np.random.Generator, clip_norm: float = 5.0) -> list[CheckResult]:
    params = _random_network(rng, Activation.IDENTITY)
    worst_bound = worst_scale = worst_idempotent = worst_direction = 0.0

    for scale in (0.001, 0.1, 1.0, 10.0):
        grads = [_random_gradient(params, rng, scale), _random_gradient(params, rng, scale)]
        norm = global_norm(grads)
        clipped = clip_by_global_norm(grads, clip_norm)
        post = global_norm(clipped)

        worst_bound = max(worst_bound, (post - clip_norm) / clip_norm)
        if norm > clip_norm:
            worst_scale = max(worst_scale, abs(post - clip_norm) / clip_norm)

        again = clip_by_global_norm(clipped, clip_norm)
        worst_idempotent = max(worst_idempotent, float(np.max(np.abs(_flat(again) - _flat(clipped)))))

        factor = min(1.0, clip_norm / norm)
        deviation = float(np.max(np.abs(_flat(clipped) - factor * _flat(grads))))
        worst_direction = max(worst_direction, deviation / post)

    return [
        CheckResult("clipped norm above the bound, relative", worst_bound, 1e-12),
        CheckResult("clipped norm of large gradients vs bound, relative", worst_scale, 1e-12),
        CheckResult("clipping applied twice", worst_idempotent, 1e-12),
        CheckResult("clipping keeps the direction, relative", worst_direction, 1e-12),
    ]


def _polyak(rng: np.random.Generator) -> list[CheckResult]:
    online = _random_network(rng, Activation.IDENTITY)
    worst_lag = worst_convex = 0.0

    for alpha in (0.01, 0.3, 1.0):
        target = online.unflatten(rng.normal(size=online.flatten().size))
        before, theta = target.flatten(), online.flatten()

        after = polyak_update(target, online, alpha).flatten()

        expected = alpha * float(np.linalg.norm(theta - before))
        worst_lag = max(worst_lag, abs(float(np.linalg.norm(after - before)) - expected) / expected)

        low, high = np.minimum(before, theta), np.maximum(before, theta)
        outside = np.maximum(low - after, 0.0) + np.maximum(after - high, 0.0)
        worst_convex = max(worst_convex, float(np.max(outside)))

    return [
        CheckResult("target step length vs alpha times distance, relative", worst_lag, 1e-12),
        CheckResult("target outside the online/target interval", worst_convex, 1e-15),
    ]


def _adam(rng: np.random.Generator) -> list[CheckResult]:
    params = _random_network(rng, Activation.IDENTITY)
    before = params.flatten()
    adam_step(params, Gradient.zeros_like(params), AdamConfig())
    fixed = float(np.max(np.abs(params.flatten() - before)))

    scalar = MlpParams.create((1, 1), [Activation.IDENTITY], rng)
    start = scalar.flatten()
    grad = Gradient.zeros_like(scalar)
    grad.layers[0].weight[:] = 2.0
    grad.layers[0].bias[:] = 2.0
    adam_step(scalar, grad, AdamConfig(learning_rate=1e-3), Direction.DESCEND)
    first = float(np.max(np.abs(np.abs(start - scalar.flatten()) - 1e-3)))

    return [
        CheckResult("Adam step with zero gradient", fixed, 0.0),
        CheckResult("first Adam step length vs learning rate", first, 1e-6),
    ]


# --- Gaussian policy -----------------------------------------------------------------------------------------------


def _log_density(rng: np.random.Generator) -> list[CheckResult]:
    mean, std = rng.normal(size=(50, 3)), rng.uniform(1e-3, 1.0, size=(50, 3))
    actions = mean + std * rng.normal(size=(50, 3))

    lp = gaussian_log_prob(mean, std, actions)
    reference = stats.norm.logpdf(actions, mean, std).sum(axis=1)
    entropy = gaussian_entropy(std)
    reference_entropy = stats.norm.entropy(scale=std).sum(axis=1)

    mu, sigma = 0.2, 0.3

    def density(a: float) -> float:
        return math.exp(float(gaussian_log_prob(np.array([mu]), np.array([sigma]), np.array([a]))))

    mass, _ = integrate.quad(density, mu - 10 * sigma, mu + 10 * sigma)

    return [
        CheckResult("log-density vs scipy", float(np.max(np.abs(lp - reference))), 1e-12),
        CheckResult("entropy vs scipy", float(np.max(np.abs(entropy - reference_entropy))), 1e-12),
        CheckResult("density mass within 10 standard deviations", abs(mass - 1.0), 1e-6),
    ]


def _policy_sampling(rng: np.random.Generator, count: int = 100_000) -> list[CheckResult]:
    policy = GaussianPolicy.create(2, 1, (8,), rng)

    # zero weights: mean 0 and std sigmoid(0) = 0.5 everywhere
    for net in policy.networks:
        for layer in net.layers:
            layer.weight[:] = 0.0
            layer.bias[:] = 0.0

    actions, log_probs = policy.sample_batch(np.zeros((1, 2)), count, rng)
    a = actions[0, :, 0]

    mean_z = abs(float(a.mean())) / (0.5 / math.sqrt(count))
    var_rel = abs(float(a.var(ddof=1)) / 0.25 - 1.0)

    recomputed = policy.log_prob_batch(np.zeros((count, 2)), actions[0])
    consistency = float(np.max(np.abs(recomputed - log_probs[0])))

    policy.std_head.layers[-1].bias[:] = -1000.0
    floored = abs(float(policy.forward(np.zeros(2)).std[0]) - policy.std_floor)

    return [
        CheckResult("sample mean of a N(0, 0.25) policy, standard errors", mean_z, 3.0),
        CheckResult("sample variance of a N(0, 0.25) policy, relative", var_rel, 0.05),
        CheckResult("attached log-probabilities vs recomputed", consistency, 1e-12),
        CheckResult("std floor engaged", floored, 0.0),
    ]


def _policy_entropy_mc(rng: np.random.Generator, count: int = 100_000) -> CheckResult:
    policy = GaussianPolicy.create(3, 2, (16, 16), rng)
    state = _smooth_point(policy.trunk, rng)

    _, log_probs = policy.sample_batch(state[None, :], count, rng)
    neg = -log_probs[0]
    se = float(neg.std(ddof=1)) / math.sqrt(count)

    return CheckResult(
        "Monte-Carlo entropy vs closed form, standard errors", abs(float(neg.mean()) - policy.entropy(state)) / se, 3.0
    )


def _score_gradient(rng: np.random.Generator, trials: int = 5) -> list[CheckResult]:
    worst = worst_mean_head = 0.0

    for _ in range(trials):
        state_dim, action_dim = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        hidden = (int(rng.integers(1, 17)), int(rng.integers(1, 17)))
        policy = GaussianPolicy.create(state_dim, action_dim, hidden, rng)

        state = _smooth_point(policy.trunk, rng)
        action = policy.sample(state, 1, rng)[0].action

        def log_prob(
            theta: np.ndarray, policy: GaussianPolicy = policy, state: np.ndarray = state, action: np.ndarray = action
        ) -> float:
            return policy.unflatten(theta).log_prob(state, action)

        fd = central_difference(log_prob, policy.flatten(), NETWORK_STEP, stencil=5)
        worst = max(worst, violation(policy.score_grad(state, action).flatten(), fd, rel=1e-5))

        at_mean = policy.score_grad(state, policy.mean_action(state))
        worst_mean_head = max(worst_mean_head, float(np.max(np.abs(at_mean.mean.flatten()))))

    return [
        CheckResult("score gradient vs finite differences, error/tolerance", worst, 1.0),
        CheckResult("mean head score at the mean action", worst_mean_head, 0.0),
    ]


def _score_identity(rng: np.random.Generator, count: int = 100_000) -> CheckResult:
    policy = GaussianPolicy.create(2, 2, (6, 6), rng)
    state = _smooth_point(policy.trunk, rng)
    actions, _ = policy.sample_batch(state[None, :], count, rng)

    mean, se = _mean_and_se(policy.score_grad_per_sample(np.repeat(state[None, :], count, axis=0), actions[0]))
    return CheckResult("mean score over policy samples, standard errors", _max_z(mean, 0.0, se), 4.0)


# --- suites --------------------------------------------------------------------------------------------------------


def gradcheck(rng: np.random.Generator) -> list[CheckResult]:
    return [
        _proposition_trials(rng),
        _tied_logit(rng),
        _bellman_residual(rng),
        _occupancy(rng),
        _objective_forms(rng),
        *_zero_temperature(rng),
        _ascent(rng),
        *_network_backward(rng),
        _soft_loss_gradient(rng),
    ]


def backup(rng: np.random.Generator) -> list[CheckResult]:
    return [_backup_unbiased(rng), _backup_variance(rng), *_backup_closed_forms(), _backup_exact_q(rng)]


def estimator(rng: np.random.Generator) -> list[CheckResult]:
    return [
        _mc_consistency(rng),
        _mc_scaling(rng),
        _actor_gradient_scaling(rng),
        _baseline_constant(rng),
        _double_sampled(rng),
        _constant_critic(rng),
        _tabular_single_sample(rng),
    ]


def algebra(rng: np.random.Generator) -> list[CheckResult]:
    return [*_clipping(rng), *_polyak(rng), *_adam(rng)]


def policy(rng: np.random.Generator) -> list[CheckResult]:
    return [
        *_log_density(rng),
        *_policy_sampling(rng),
        _policy_entropy_mc(rng),
        *_score_gradient(rng),
        _score_identity(rng),
    ]


SUITES: dict[str, Suite] = {
    "gradcheck": gradcheck,
    "backup": backup,
    "estimator": estimator,
    "algebra": algebra,
    "policy": policy,
}

ALL = "all"


def suite_names() -> list[str]:
    return [*SUITES, ALL]


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    """Runs one suite (or all of them), each suite starts from its own
    generator seeded with ``seed``."""

    if name == ALL:
        return [res for suite in SUITES for res in run_suite(suite, seed)]

    try:
        suite = SUITES[name]
    except KeyError:
        raise ConfigurationError(f"Unknown suite {name}, available: {', '.join(suite_names())}.", ["suite"]) from None

    logger.info(f"Running suite {name}.")
    return suite(np.random.default_rng(seed))
