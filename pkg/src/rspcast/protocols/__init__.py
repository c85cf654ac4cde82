from .accounting import (
    CostRow,
    ResourceReport,
    SweepRow,
    entropy_closed_form,
    entropy_numerical,
    entropy_sweep,
    message_bits,
    resource_report,
    teleportation_baseline,
)
from .applications import (
    eavesdropper_average,
    run_bell_sharing,
    run_controlled_entanglement,
    run_encrypted_transfer,
    run_voting,
)
from .broadcast import (
    run_basic_broadcast,
    run_diff_bases,
    run_diff_states,
    run_n_party,
    run_probabilistic_unknown_angle,
    run_qutrit_broadcast,
    run_single_receiver_rsp,
)
from .transcript import (
    ClassicalMessage,
    IncompleteTranscript,
    LocalityError,
    Party,
    ProtocolTranscript,
    transcript_from_dict,
    transcript_to_dict,
)
