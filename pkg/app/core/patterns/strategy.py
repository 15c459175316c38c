from abc import ABC, abstractmethod

from app.models.schemas import GainPolicy, ProtocolParams
from app.services.optics import cancellation_gain, loss_compensated_gain


class GainStrategy(ABC):
    policy: GainPolicy

    @abstractmethod
    def compute_gain(self, R: float, eta: float) -> float:
        pass


class CancellationGainStrategy(GainStrategy):
    policy = GainPolicy.CANCELLATION

    def compute_gain(self, R: float, eta: float) -> float:
        """
        Cancels the beamsplitter vacuum in the displaced field.
        Ignores eta: under loss the output is no longer at unity gain.
        """
        return cancellation_gain(R)


class LossCompensatedGainStrategy(GainStrategy):
    policy = GainPolicy.LOSS_COMPENSATED

    def compute_gain(self, R: float, eta: float) -> float:
        """Assumes the channel transmission eta is known exactly to the sender."""
        return loss_compensated_gain(R, eta)


class ManualGainStrategy(GainStrategy):
    policy = GainPolicy.MANUAL

    def __init__(self, gain: float):
        self.gain = gain

    def compute_gain(self, R: float, eta: float) -> float:
        return self.gain


class GainContext:
    def __init__(self, strategy: GainStrategy):
        self._strategy = strategy

    def calculate(self, R: float, eta: float) -> float:
        return self._strategy.compute_gain(R, eta)


GAIN_STRATEGY_MAP: dict[GainPolicy, type[GainStrategy]] = {
    GainPolicy.CANCELLATION: CancellationGainStrategy,
    GainPolicy.LOSS_COMPENSATED: LossCompensatedGainStrategy,
    GainPolicy.MANUAL: ManualGainStrategy,
}


def strategy_for(params: ProtocolParams) -> GainStrategy:
    if params.gain_policy == GainPolicy.MANUAL:
        return ManualGainStrategy(params.gain)
    return GAIN_STRATEGY_MAP[params.gain_policy]()


def gain_for(params: ProtocolParams) -> float:
    return GainContext(strategy_for(params)).calculate(params.R, params.eta)
