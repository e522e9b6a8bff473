from .anfis import (AnfisModel, TrainingSample, anfis_infer, anfis_train, default_model,
                    demo_dataset, linear_dataset, loss_and_grad, normalized_firing)
from .closed_loop import (NOMINAL_ANFIS_SCALES, NOMINAL_PID_GAINS, AnfisController,
                          ClosedLoopResult, ProfileStep, Scenario, build_training_set,
                          clone_pid, closed_loop_metrics, closed_loop_simulate,
                          feedforward_duty, nominal_pid, samples_from_runs)
from .pid import PidController, pid_step
from .pv import PvPanel, fit_panel, pv_operating_point

