"""Independent reference values for the unit tests.

Everything here is computed with mpmath at 30 digits, from the model
definitions alone: tail integrals by mpmath.quad, θ-derivatives by
mpmath.diff. The printed numbers are frozen into the C++ tests; rerun this
script to regenerate them.
"""
from mpmath import mp, mpf, quad, diff, npdf, ncdf, erfinv, sqrt, log, pi, inf, exp, gamma

mp.dps = 30


def upper_normal(alpha):
    # z with P(Z > z) = alpha
    return sqrt(2) * erfinv(1 - 2 * mpf(alpha))


# Location-scale model built from a standard density.
def ls_density(std_pdf):
    return lambda x, mu, s: std_pdf((x - mu) / s) / s


def t_pdf(nu):
    nu = mpf(nu)
    c = gamma((nu + 1) / 2) / (sqrt(nu * pi) * gamma(nu / 2))
    return lambda z: c * (1 + z * z / nu) ** (-(nu + 1) / 2)


def quantile_residual_2(dens, ginv, dlogprior, theta, alpha):
    """ε = ∂_s(g^{st} μ_t) + g^{st} μ_t ∂_s λ with μ_t = ∂_t P_θ'(X > q(θ, α)) at θ' = θ."""

    def q_of(mu, s):
        # upper α point by root finding on the survival function
        from mpmath import findroot
        surv = lambda x: quad(lambda u: dens(u, mu, s), [x, inf]) - alpha
        return findroot(surv, mu + s)

    def mu_vec(mu, s):
        q = q_of(mu, s)
        m1 = diff(lambda a: quad(lambda u: dens(u, a, s), [q, inf]), mu)
        m2 = diff(lambda b: quad(lambda u: dens(u, mu, b), [q, inf]), s)
        return [m1, m2]

    def flux(mu, s):
        m = mu_vec(mu, s)
        G = ginv(mu, s)
        return [G[0][0] * m[0] + G[0][1] * m[1], G[1][0] * m[0] + G[1][1] * m[1]]

    mu, s = map(mpf, theta)
    F = flux(mu, s)
    div = diff(lambda a: flux(a, s)[0], mu) + diff(lambda b: flux(mu, b)[1], s)
    dl = dlogprior(mu, s)
    return div + F[0] * dl[0] + F[1] * dl[1]


def section(title):
    print("\n# " + title)


section("location-scale-normal, Jeffreys (sigma^-2): quantile residual at theta=(0.3, 1.7)")
dens = ls_density(npdf)
ginv = lambda mu, s: [[s * s, 0], [0, s * s / 2]]
for a in ["0.1", "0.25", "0.5", "0.9"]:
    e = quantile_residual_2(dens, ginv, lambda mu, s: [0, -2 / s], (mpf("0.3"), mpf("1.7")), mpf(a))
    z = upper_normal(a)
    print(f"alpha={a}  eps={mp.nstr(e, 17)}  closed form -phi(z)z/2={mp.nstr(-npdf(z) * z / 2, 17)}")

section("location-scale-t(5), Jeffreys: quantile residual at theta=(0, 1)")
nu = 5
tp = t_pdf(nu)
dens_t = ls_density(tp)
# per-unit information: E[psi^2] = (nu+1)/(nu+3), E[(1+Z psi)^2] = 2 nu/(nu+3)
il = mpf(nu + 1) / (nu + 3)
isc = mpf(2 * nu) / (nu + 3)
ginv_t = lambda mu, s: [[s * s / il, 0], [0, s * s / isc]]
for a in ["0.2", "0.7"]:
    e = quantile_residual_2(dens_t, ginv_t, lambda mu, s: [0, -2 / s], (mpf(0), mpf(1)), mpf(a))
    print(f"alpha={a}  eps={mp.nstr(e, 17)}")

section("normal-mean-eq-var N(theta, theta): Jeffreys quantile residual at theta=1.3")
# g = (2 theta + 1) / (2 theta^2); Jeffreys lambda = 0.5 log g
th0 = mpf("1.3")
def nm_surv(x, th):
    return 1 - ncdf((x - th) / sqrt(th))
def nm_q(th, a):
    from mpmath import findroot
    return findroot(lambda x: nm_surv(x, th) - a, th)
def nm_flux(th, a):
    q = nm_q(th, a)
    mu = diff(lambda t: nm_surv(q, t), th)
    g = (2 * th + 1) / (2 * th * th)
    return mu / g
for a in ["0.15", "0.6"]:
    a = mpf(a)
    jeff = lambda t: log((2 * t + 1) / (2 * t * t)) / 2
    e = diff(lambda t: nm_flux(t, a), th0) + nm_flux(th0, a) * diff(jeff, th0)
    print(f"alpha={mp.nstr(a, 3)}  eps={mp.nstr(e, 17)}")

section("normal-mean-eq-var: HPD xi and b11 at theta=1")
# HPD region of mass alpha at theta0: [theta0 - c sqrt(theta0), theta0 + c sqrt(theta0)], c = z_{(1+alpha)/2}
def nm_xi(th0, a):
    c = upper_normal((1 - a) / 2)
    lo, hi = th0 - c * sqrt(th0), th0 + c * sqrt(th0)
    P = lambda t: ncdf((hi - t) / sqrt(t)) - ncdf((lo - t) / sqrt(t))
    return diff(P, th0)
for a in ["0.3", "0.8"]:
    print(f"alpha={a}  xi={mp.nstr(nm_xi(mpf(1), mpf(a)), 17)}")
b11 = quad(lambda a: diff(lambda b: nm_xi(mpf(1), b), a) ** 2, [0, mpf("0.5"), 1])
print(f"b11={mp.nstr(b11, 17)}")

section("bvn standard normal: HPD threshold for mass alpha is (1-alpha)/(2 pi)")
for a in ["0.25", "0.75"]:
    print(f"alpha={a}  m={mp.nstr((1 - mpf(a)) / (2 * pi), 17)}")

section("average prediction error, location-scale-normal Jeffreys, r = scale: int z(alpha)^2 dalpha")
print("ape=" + mp.nstr(quad(lambda a: upper_normal(a) ** 2, [0, mpf("0.5"), 1]), 17))
