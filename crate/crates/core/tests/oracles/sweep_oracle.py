from mpmath import mp, mpf, quad, exp, sqrt, pi, inf
mp.dps = 40
rho, tau = mpf('0.3'), mpf('1.5')
H = [[mpf('0.4'), mpf('-0.7'), mpf('0.2')], [mpf('0.9'), mpf('0.1'), mpf('-0.5')]]
y = [1, -1]
eta_x = [mpf('0.3'), mpf('-0.2'), mpf('0.05')]
m_old = [mpf('0.1'), mpf('-0.4')]
rho_z_old = [mpf('0.2'), mpf('0.3')]
rho_x_old = [mpf('-0.1'), mpf('0.5'), mpf('0.25')]
cav_x = [mpf('1.2'), mpf('0.8'), mpf('2.0')]
cav_z = [mpf('0.6'), mpf('1.7')]
def prior(r, v):
    w = lambda x: exp(-v*x*x/2 + r*x) * rho * exp(-x*x/(2*tau)) / sqrt(2*pi*tau)
    z0 = (1-rho) + quad(w, [-inf, 0, inf])
    m1 = quad(lambda x: x*w(x), [-inf, 0, inf]) / z0
    m2 = quad(lambda x: x*x*w(x), [-inf, 0, inf]) / z0
    return m1, m2 - m1*m1
def lik(yy, r, v):
    w = lambda z: exp(-v*z*z/2 + r*z)
    rng = [0, inf] if yy > 0 else [-inf, 0]
    z0 = quad(w, rng)
    m1 = quad(lambda z: z*w(z), rng) / z0
    m2 = quad(lambda z: z*z*w(z), rng) / z0
    return m1, m2 - m1*m1
def sweep(d):
    keep = 1 - d
    dmp = lambda new, old: [keep*a + d*b for a, b in zip(new, old)]
    hx = [sum(H[j][i]*eta_x[i] for i in range(3)) for j in range(2)]
    rz = dmp([cav_z[j]*hx[j] - m_old[j] for j in range(2)], rho_z_old)
    ez, cz = zip(*[lik(y[j], rz[j], cav_z[j]) for j in range(2)])
    m = dmp([cav_z[j]*ez[j] - rz[j] for j in range(2)], m_old)
    rx = dmp([cav_x[i]*eta_x[i] + sum(H[j][i]*m[j] for j in range(2)) for i in range(3)], rho_x_old)
    ex, cx = zip(*[prior(rx[i], cav_x[i]) for i in range(3)])
    return dict(rho_z=rz, eta_z=ez, chi_z=cz, m=m, rho_x=rx, eta_x=ex, chi_x=cx)
for d in ['0', '0.3']:
    out = sweep(mpf(d))
    print('damping', d)
    for k, v in out.items():
        print(k, ', '.join(mp.nstr(x, 17) for x in v))
