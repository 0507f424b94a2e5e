import logging
import platform
from typing import ClassVar

import psutil

from multiclass_auc.data.data_models import MachineInfo

logger = logging.getLogger(__name__)


class MachineProfile:
    """Description of the machine benchmarks run on, gathered once per process."""

    _instance: ClassVar = None
    _info: MachineInfo | None = None

    def __new__(cls: type["MachineProfile"]) -> "MachineProfile":
        if cls._instance is None:
            # Create instance using super().__new__ to bypass any recursion
            instance = super().__new__(cls)
            cls._instance = instance
        return cls._instance

    def cpu_frequency_mhz(self) -> float | None:
        """Current CPU frequency, if the platform reports one."""
        try:
            frequency = psutil.cpu_freq()
        except (NotImplementedError, OSError, RuntimeError):  # pragma: no cover
            logger.debug("CPU frequency is not available on this platform.")
            return None
        return float(frequency.current) if frequency else None

    def describe(self) -> MachineInfo:
        """Platform, Python version, logical CPU count, CPU frequency and total memory."""
        if self._info is None:
            self._info = MachineInfo(
                platform=platform.platform(),
                python=platform.python_version(),
                cpu_count=psutil.cpu_count(logical=True),
                cpu_freq_mhz=self.cpu_frequency_mhz(),
                memory_total_mb=psutil.virtual_memory().total / 2**20,
            )
            logger.debug(f"Machine: {self._info}")
        return self._info
