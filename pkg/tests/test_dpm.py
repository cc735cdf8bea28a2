'''
Test Dirichlet process mixtures: densities, prior draws, the Gibbs sampler and
the rate and bias helpers
'''

import numpy as np
import sciris as sc
import scipy.optimize as spo
import supsim as ss
import pytest

sc.options(backend='agg') # Turn off interactive plots

grid = ss.Grid(-9, 9, 4097) # Contains 0 and ±1 as nodes


def ok(string):
    ''' Print out a successful test nicely '''
    return sc.printgreen(f'✓ {string}\n')


def test_mixture_density():
    sc.heading('Testing mixture densities...')

    p = ss.mixture_density(ss.MixingMeasure([0], [1]), 'laplace', grid=grid)
    assert np.isclose(p.evaluate(0), 0.5)
    p = ss.mixture_density(ss.MixingMeasure([-1, 1], [0.5, 0.5]), 'laplace', grid=grid)
    assert np.isclose(p.evaluate(0), 0.5*np.exp(-1))
    ok('Hand-computed values at 0 match: ½ and e^{-1}/2')

    rng = np.random.default_rng(1)
    for i in range(20):
        k = int(rng.integers(1, 10))
        G = ss.MixingMeasure(rng.uniform(-1, 1, k), rng.dirichlet(np.ones(k)))
        p = ss.mixture_density(G, 'laplace', grid=grid)
        assert p.sup() <= 0.5 + 1e-9
        assert abs(p.integral() - 1) < 1e-3
    ok('Laplace mixtures are bounded by ½ and integrate to 1')

    G = ss.MixingMeasure([0.3, -0.2, 0.8], [0.2, 0.5, 0.3])
    perm = [2, 0, 1]
    swapped = ss.MixingMeasure(G.atoms[perm], G.weights[perm])
    for kernel, sigma in [['laplace', None], ['gaussian', 0.4]]:
        p1 = ss.mixture_density(G, kernel, sigma=sigma, grid=grid)
        p2 = ss.mixture_density(swapped, kernel, sigma=sigma, grid=grid)
        assert np.allclose(p1.values, p2.values, rtol=0, atol=1e-12)
    ok('The mixture density does not depend on the labelling of atoms')

    with pytest.raises(ss.InvalidInputError):
        ss.MixingMeasure([0, 1], [0.7, 0.7])
    with pytest.raises(ss.InvalidInputError):
        ss.mixture_density(G, 'gaussian', grid=grid) # Needs sigma
    with pytest.raises(ss.InvalidInputError):
        ss.DPMixtureSpec('cauchy')

    return p1


def test_bayes_estimator():
    sc.heading('Testing the mixture Bayes estimator...')

    G1 = ss.MixingMeasure([-0.5], [1])
    G2 = ss.MixingMeasure([0.2, 0.7], [0.4, 0.6])
    p1 = ss.mixture_density(G1, grid=grid)
    p2 = ss.mixture_density(G2, grid=grid)
    single = ss.bayes_estimator([G1], grid=grid)
    assert np.allclose(single.values, p1.values, rtol=0, atol=1e-12)
    both = ss.bayes_estimator([(G1, None), (G2, None)], grid=grid)
    assert np.allclose(both.values, (p1.values + p2.values)/2, rtol=0, atol=1e-12)
    ok('One draw gives its own density; two draws give the pointwise midpoint')

    g1 = ss.mixture_density(G1, 'gaussian', sigma=0.3, grid=grid)
    g2 = ss.mixture_density(G2, 'gaussian', sigma=0.6, grid=grid)
    both = ss.bayes_estimator([(G1, 0.3), (G2, 0.6)], 'gaussian', grid=grid)
    assert np.allclose(both.values, (g1.values + g2.values)/2, rtol=0, atol=1e-12)
    ok('Draws with different bandwidths are averaged correctly')

    with pytest.raises(ss.InvalidInputError):
        ss.bayes_estimator([], grid=grid)

    return both


def test_prior_draw():
    sc.heading('Testing stick-breaking prior draws...')

    spec = ss.DPMixtureSpec('laplace', alpha_mass=1.0, a=2.0)
    G, sigma = ss.prior_draw(spec, seed=1, T=1)
    assert G.weights.tolist() == [1.0] and sigma is None
    ok('With T = 1 the only weight is 1')

    m = 20_000
    first = np.zeros(m)
    for i in range(m):
        G, _ = ss.prior_draw(spec, seed=i, T=20)
        first[i] = G.weights[0]
        assert np.all(np.abs(G.atoms) <= spec.a)
    assert abs(first.mean() - 0.5) < 4*np.sqrt(1/12/m)
    ok(f'Mean of the first stick is {first.mean():0.4f} (expected ½); atoms stay in [-a, a]')

    gspec = ss.DPMixtureSpec('gaussian')
    G, sigma = ss.prior_draw(gspec, seed=2)
    assert sigma > 0 and len(G) == gspec.n_sticks()
    assert spec.n_sticks(4000) == max(50, int(np.ceil(10*np.log(4000))))
    ok('Gaussian draws carry a bandwidth; the truncation follows max(50, ⌈10α log n⌉)')

    return first


def test_gibbs():
    sc.heading('Testing the blocked Gibbs sampler...')

    spec = ss.DPMixtureSpec('laplace', alpha_mass=1.0, a=1.0)
    samples = ss.sample('laplace', 500, seed=3)
    kw = dict(iters=600, burnin=200, thin=2)
    draws, state = ss.fit_gibbs(samples, spec, seed=4, return_state=True, **kw)
    assert len(draws) == 200
    for G, sigma in draws[::20]:
        p = ss.mixture_density(G, grid=grid)
        assert p.sup() <= 0.5 + 1e-9
        assert abs(p.integral() - 1) < 1e-3
    ok('Every posterior draw is a density bounded by ½')

    p_hat = ss.bayes_estimator(draws, grid=grid)
    mode = grid.x[np.argmax(p_hat.values)]
    assert abs(mode) < 0.1, f'Mode of the Bayes estimator is {mode}'
    diag = state.diagnostics()
    assert 0 < diag.atom_acceptance < 1 and diag.iterations == 600
    ok(f'Mode at {mode:0.3f}, atom acceptance {diag.atom_acceptance:0.2f}')

    # A chain started at the truth lands where chains started from the prior do
    ref = ss.bayes_estimator(ss.fit_gibbs(samples, spec, seed=5, **kw), grid=grid)
    from_truth = ss.bayes_estimator(ss.fit_gibbs(samples, spec, seed=6, init=ss.MixingMeasure([0], [1]), **kw), grid=grid)
    spread = ss.norm(p_hat - ref, 'sup')
    diff = ss.norm(from_truth - p_hat, 'sup')
    assert diff <= max(2*spread, 0.03), f'Chain from the truth differs by {diff} (spread {spread})'
    ok(f'Initialization does not matter: difference {diff:0.4f}, between-chain spread {spread:0.4f}')

    gdraws, gstate = ss.fit_gibbs(ss.sample('gaussian', 300, seed=7), ss.DPMixtureSpec('gaussian'), iters=300, burnin=100, seed=8, return_state=True)
    assert all(sigma > 0 for G, sigma in gdraws)
    assert 0 <= gstate.diagnostics().sigma_acceptance <= 1
    ok('Gaussian chains update the bandwidth')

    with pytest.raises(ss.InvalidInputError):
        ss.fit_gibbs(samples, spec, iters=100, burnin=100)
    with pytest.raises(ss.InvalidInputError):
        ss.fit_gibbs(samples, ss.DPMixtureSpec(truncation=5), iters=10, burnin=0)

    return p_hat


def test_rates_and_bias():
    sc.heading('Testing the Laplace rate and Gaussian bias envelope...')

    n = spo.brentq(lambda n: n/np.log(n) - 256, 10, 1e5)
    assert np.isclose(ss.laplace_rate_point(n), 0.125)
    ok('The Laplace rate is 1/8 where n/log n = 256')

    F = ss.MixingMeasure([-1, 0.5], [0.3, 0.7])
    measured, envelope = ss.gaussian_bias_check(F, sigma=1.25, J=4) # σ·ω = 10
    assert envelope < 1e-20 and measured < 1e-15
    ok(f'With σω = 10 the envelope is {envelope:0.2e}')

    for sigma in [0.25, 0.5, 1.0]:
        envelopes = []
        for J in range(3, 7):
            measured, envelope = ss.gaussian_bias_check(F, sigma=sigma, J=J)
            assert measured <= envelope + 1e-12, f'σ={sigma}, J={J}: {measured} > {envelope}'
            envelopes.append(envelope)
        assert np.all(np.diff(envelopes) <= 0) and envelopes[0] > envelopes[-1]
    ok('The measured bias stays under the envelope, which decreases in J')

    measured, envelope, extra = ss.gaussian_bias_check(F, sigma=0.5, J=4, full_output=True)
    finer, _ = ss.gaussian_bias_check(F, sigma=0.5, J=5)
    assert extra.omega == 8 and extra.cutoff == 16
    assert extra.envelope_at_cutoff < envelope
    assert finer <= extra.envelope_at_cutoff + 1e-8
    ok(f'The tail beyond 2^J ({extra.envelope_at_cutoff:0.2e}) bounds the bias one level finer ({finer:0.2e})')

    with pytest.raises(ss.PreconditionError):
        ss.gaussian_bias_check(F, sigma=1, J=3, kernel='haar')

    spec = ss.DPMixtureSpec('gaussian')
    floors = [ss.sigma_floor(n, beta=2) for n in [10**3, 10**4, 10**5]]
    assert np.all(np.diff(floors) < 0)
    below = [ss.sigma_prior_mass_below(spec, s) for s in [0.0, 0.05, 0.2, 1.0, 100]]
    assert below[0] == 0 and below[-1] == 1 and np.all(np.diff(below) >= 0)
    ok(f'σ floors {np.round(floors, 4)} shrink with n; prior mass below s is a CDF')

    return floors


if __name__ == '__main__':

    with sc.timer():
        p1     = test_mixture_density()
        both   = test_bayes_estimator()
        first  = test_prior_draw()
        p_hat  = test_gibbs()
        floors = test_rates_and_bias()
