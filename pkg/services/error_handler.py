"""
Error Handler Service

This module provides unified error handling for the finite element
services and the CLI. It turns exceptions raised anywhere in a run into a
coded ErrorDiagnostic and logs them consistently.
"""

from typing import Dict, Optional, Any
import logging

from config.config_validator import ConfigValidationError
from models.error_models import ErrorDiagnostic, FemError, FemErrorCodes


class ErrorHandler:
    """
    统一错误处理器

    提供标准化的错误处理功能，包括诊断对象创建、异常处理和日志记录。
    """

    def __init__(self, logger: Optional[logging.Logger] = None):
        """
        初始化错误处理器

        Args:
            logger: 可选的日志记录器，如果未提供则创建默认记录器
        """
        self.logger = logger or logging.getLogger(__name__)

    def create_error(self, code: int, message: str, data: Optional[Dict[str, Any]] = None) -> ErrorDiagnostic:
        """
        创建标准化的诊断对象

        Args:
            code: 错误代码
            message: 错误描述信息
            data: 可选的额外错误数据
        """
        error = ErrorDiagnostic(code=code, message=message, data=data)
        self.logger.error(f"Error created - Code: {code}, Message: {message}, Data: {data}")
        return error

    def create_config_error(self, errors: list) -> ErrorDiagnostic:
        """创建配置错误"""
        return self.create_error(
            code=FemErrorCodes.CONFIG_INVALID,
            message="Invalid configuration",
            data={"errors": list(errors)}
        )

    def create_invalid_input_error(self, details: str) -> ErrorDiagnostic:
        """创建无效输入错误"""
        return self.create_error(
            code=FemErrorCodes.INVALID_INPUT,
            message="Invalid input",
            data={"details": details}
        )

    def create_io_error(self, details: str) -> ErrorDiagnostic:
        """创建文件读写错误"""
        return self.create_error(
            code=FemErrorCodes.IO_FAILED,
            message="I/O error",
            data={"details": details}
        )

    def create_internal_error(self, details: str = "Internal error") -> ErrorDiagnostic:
        """创建内部错误"""
        return self.create_error(
            code=FemErrorCodes.INTERNAL,
            message="Internal error",
            data={"details": details}
        )

    def handle_exception(self, exception: Exception, context: str = "") -> ErrorDiagnostic:
        """
        处理异常并转换为诊断对象

        Args:
            exception: 捕获的异常对象
            context: 异常发生的上下文信息
        """
        error_message = f"{context}: {str(exception)}" if context else str(exception)
        self.logger.debug(f"Exception handled: {error_message}", exc_info=True)

        if isinstance(exception, FemError):
            return self.create_error(exception.code, error_message, exception.data or None)
        elif isinstance(exception, ConfigValidationError):
            return self.create_config_error(exception.errors)
        elif isinstance(exception, (ValueError, TypeError, KeyError)):
            return self.create_invalid_input_error(error_message)
        elif isinstance(exception, OSError):
            return self.create_io_error(error_message)
        elif isinstance(exception, MemoryError):
            return self.create_internal_error(f"Out of memory: {error_message}")
        else:
            return self.create_internal_error(error_message)
