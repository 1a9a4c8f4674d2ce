"""Host-runtime tooling around the fuzzing pipeline.

Three jobs, one package: harvest seeds by instrumenting live library
calls (instrument), enumerate undocumented internal APIs from source
(devapi), and execute rendered case scripts as a disposable process
(runner). The only couplings to the fuzzer are its wire formats: the
JSONL trace-record schema on the way in and the ORION marker grammar on
the way out.

mockdl ships alongside as the installable practice target; its planted
faults are real process faults.
"""

from . import devapi
from .instrument import Hooks, instrument
from .record import Unencodable
from .runner import run_script

__all__ = ["devapi", "Hooks", "instrument", "run_script", "Unencodable"]
