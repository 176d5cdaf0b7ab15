import sys


class KnnLabException(Exception):
    """Custom Exception class """

    def __init__(self, error_message, error_detail=sys):
        super().__init__(error_message)
        self.error_message = KnnLabException.get_detailed_error_message(error_message=error_message,
                                                                      error_detail=error_detail)

    @staticmethod
    def get_detailed_error_message(error_message, error_detail=sys) -> str:
        """
        error_message: Exception object or plain message
        error_detail: object of sys module

        Raised outside an except block there is no traceback to report,
        so the plain message is kept.
        """
        _, _, exec_tb = error_detail.exc_info()
        if exec_tb is None:
            return str(error_message)

        exception_block_line_number = exec_tb.tb_frame.f_lineno
        try_block_line_number = exec_tb.tb_lineno
        file_name = exec_tb.tb_frame.f_code.co_filename

        error_message = f"""
        Error occured in script: [ {file_name} ] at
        try_block_line_number:[{try_block_line_number}]
        and exception_block_line number:[{exception_block_line_number}]
        error message:[{error_message}]"""

        return error_message

    def __str__(self):
        return self.error_message

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.args[0]!r})"


class UnsupportedKernelSpec(KnnLabException):
    pass


class DimensionMismatch(KnnLabException):
    pass


class IntegrationBudgetExceeded(KnnLabException):
    pass


class InvalidData(KnnLabException):
    pass


class NotEnoughPoints(KnnLabException):
    pass


class DegenerateRadius(KnnLabException):
    """k-th neighbour distance is zero: the query coincides with at least k points."""

    def __init__(self, error_message, radius: float = 0.0, error_detail=sys):
        super().__init__(error_message, error_detail)
        self.radius = radius


class InvalidSchedule(KnnLabException):
    pass


class MissingResponses(KnnLabException):
    pass


class ModelMisconfigured(KnnLabException):
    pass


class OutsideEvaluationBox(KnnLabException):
    pass


class InvalidTarget(KnnLabException):
    pass


class StudyAborted(KnnLabException):
    pass


class PreconditionFailed(KnnLabException):
    pass


class ConfigValidationError(KnnLabException):
    """Configuration rejected at load time; `key` names the offending entry."""

    def __init__(self, key: str, error_message, error_detail=sys):
        super().__init__(error_message, error_detail)
        self.key = key


class BoundaryBiasWarning(UserWarning):
    pass
