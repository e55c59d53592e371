"""Error sources a budget is split into.

Each source turns a noise realization into the weighted simulation runs
whose infidelities add up to its contribution. Sources register
themselves by (gate, name) when their class is defined.
"""

from .devices import Settings
from .noise import DecoherenceParams
from .pulses import CalibrationErrors


__all__ = ('ErrorSource', 'sources_for', 'source_names')


class SourceRegistry(type):
    SOURCES = {}

    def __new__(mcs, name, bases, attrs):
        clazz = type.__new__(mcs, name, bases, attrs)
        if attrs.get('name'):
            mcs.SOURCES[(clazz.gate, clazz.name)] = clazz
        return clazz


class ErrorSource(metaclass=SourceRegistry):
    """Base class for a source.

    ``subtract_baseline`` sources remove the noise-free run of their frame
    and may therefore come out negative.
    """

    name = None
    gate = None
    frame = 'rwa'
    subtract_baseline = False
    may_be_negative = False

    def settings(self, realization):
        raise NotImplementedError()

    def baseline(self, realization):
        return Settings(frame=self.frame)

    def terms(self, realization):
        terms = [(1.0, self.settings(realization))]
        if self.subtract_baseline:
            terms.append((-1.0, self.baseline(realization)))
        return terms

    def __repr__(self):
        return '<%s %s/%s>' % (self.__class__.__name__, self.gate, self.name)


def sources_for(gate):
    return [cls() for (g, _), cls in SourceRegistry.SOURCES.items() if g == gate]


def source_names(gate):
    return [s.name for s in sources_for(gate)]


class SqgT1(ErrorSource):
    name = 'T1'
    gate = 'sqg'

    def settings(self, realization):
        d = realization.decoherence
        return Settings(frame=self.frame,
                        decoherence=DecoherenceParams(t1=d.t1, teff=d.teff))


class SqgTphi(ErrorSource):
    name = 'Tphi'
    gate = 'sqg'

    def settings(self, realization):
        return Settings(frame=self.frame, decoherence=DecoherenceParams(
            tphi=realization.decoherence.tphi))


class SqgAmplitude(ErrorSource):
    name = 'eps_A'
    gate = 'sqg'

    def settings(self, realization):
        return Settings(frame=self.frame, errors=CalibrationErrors(
            eps_A=realization.errors.eps_A))


class SqgBeta(ErrorSource):
    name = 'eps_beta'
    gate = 'sqg'
    frame = 'lab'
    subtract_baseline = True
    may_be_negative = True

    def settings(self, realization):
        return Settings(frame=self.frame, errors=CalibrationErrors(
            eps_beta=realization.errors.eps_beta))


class SqgDrag(ErrorSource):
    """Leakage and phase errors left by the calibrated pulse on a qutrit."""

    name = 'DRAG'
    gate = 'sqg'
    frame = 'lab'

    def settings(self, realization):
        return Settings(frame=self.frame)


class SqgFlux(ErrorSource):
    name = '1/f'
    gate = 'sqg'

    def settings(self, realization):
        return Settings(frame=self.frame,
                        one_over_f=realization.decoherence.tphi_1f[:1])


class SqgDetuning(ErrorSource):
    name = 'delta_omega'
    gate = 'sqg'

    def settings(self, realization):
        return Settings(frame=self.frame, errors=CalibrationErrors(
            delta_omega=realization.errors.delta_omega))


class CzSource(ErrorSource):
    gate = 'cz'
    frame = 'lab'
    subtract_baseline = True
    may_be_negative = True
    element = None


class CzT1Q1(CzSource):
    name = 'T1_Q1'
    element = 0

    def settings(self, realization):
        d = realization.decoherence
        t1 = tuple(t if i == self.element else None for i, t in enumerate(d.t1))
        return Settings(frame=self.frame,
                        decoherence=DecoherenceParams(t1=t1, teff=d.teff))


class CzT1C(CzT1Q1):
    name = 'T1_C'
    element = 1


class CzT1Q2(CzT1Q1):
    name = 'T1_Q2'
    element = 2


class CzFluxQ1(CzSource):
    name = '1/f_Q1'
    element = 0

    def settings(self, realization):
        tphi = realization.decoherence.tphi_1f
        return Settings(frame=self.frame, one_over_f=tuple(
            t if i == self.element else None for i, t in enumerate(tphi)))


class CzFluxC(CzFluxQ1):
    name = '1/f_C'
    element = 1


class CzFluxQ2(CzFluxQ1):
    name = '1/f_Q2'
    element = 2


class CzControl(CzSource):
    """Pulse residual plus amplitude and duration errors, summed."""

    name = 'control'

    def terms(self, realization):
        e = realization.errors
        baseline = self.baseline(realization)
        return [(1.0, baseline),
                (1.0, Settings(frame=self.frame,
                               errors=CalibrationErrors(eps_amp_cz=e.eps_amp_cz))),
                (-1.0, baseline),
                (1.0, Settings(frame=self.frame,
                               errors=CalibrationErrors(eps_tau_c=e.eps_tau_c))),
                (-1.0, baseline)]


class CzFluxTails(CzSource):
    name = 'flux_tails'

    def settings(self, realization):
        return Settings(frame=self.frame, kernel=realization.kernel)
