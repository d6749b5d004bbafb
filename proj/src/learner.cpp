#include "gars/learner.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <set>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Cholesky>
#include <json.hpp>

namespace gars {

namespace {

// Class probabilities for logits Z (m x (C-1)) with reference class C-1 pinned at 0.
MatrixXd softmax_probs(const MatrixXd& Z) {
    const int m = static_cast<int>(Z.rows());
    const int C = static_cast<int>(Z.cols()) + 1;
    MatrixXd P(m, C);
    for (int i = 0; i < m; ++i) {
        double mx = 0.0;
        for (int c = 0; c < C - 1; ++c) mx = std::max(mx, Z(i, c));
        double sum = std::exp(-mx);
        for (int c = 0; c < C - 1; ++c) {
            P(i, c) = std::exp(Z(i, c) - mx);
            sum += P(i, c);
        }
        P(i, C - 1) = std::exp(-mx);
        P.row(i) /= sum;
    }
    return P;
}

}  // namespace

MultinomialLogit MultinomialLogit::fit(const MatrixXd& X, const std::vector<int>& y, int C,
                                       const MultinomialLogitSpec& spec,
                                       const std::vector<double>* w) {
    const int m = static_cast<int>(X.rows());
    if (m < 1 || static_cast<int>(y.size()) != m)
        throw ValidationError("MultinomialLogit: empty or mismatched training data");
    if (!X.allFinite()) throw ValidationError("MultinomialLogit: non-finite features");

    MultinomialLogit model;
    model.C_ = C;

    std::vector<double> weights = w ? *w : std::vector<double>(m, 1.0);
    double wtotal = 0.0;
    for (double v : weights) wtotal += v;

    std::set<int> classes(y.begin(), y.end());
    if (classes.size() < 2) {
        model.constant_ = true;
        VectorXd counts = VectorXd::Zero(C);
        for (int v : y) counts(v) += 1.0;
        model.const_probs_ = (counts.array() + 0.5) / (m + 0.5 * C);
        return model;
    }

    const int q = static_cast<int>(X.cols()) + 1;  // + intercept
    MatrixXd Xb(m, q);
    Xb.leftCols(q - 1) = X;
    Xb.col(q - 1).setOnes();

    MatrixXd theta = MatrixXd::Zero(C - 1, q);
    const double l2 = spec.l2;

    auto loss_grad = [&](const MatrixXd& th, MatrixXd* grad, MatrixXd* probs) {
        const MatrixXd Z = Xb * th.transpose();
        const MatrixXd P = softmax_probs(Z);
        double ll = 0.0;
        for (int i = 0; i < m; ++i)
            ll -= weights[i] * std::log(std::max(P(i, y[i]), 1e-300));
        ll /= wtotal;
        double pen = 0.0;
        for (int c = 0; c < C - 1; ++c)
            pen += 0.5 * l2 * th.row(c).head(q - 1).squaredNorm();
        if (grad) {
            grad->setZero(C - 1, q);
            VectorXd r(m);
            for (int c = 0; c < C - 1; ++c) {
                for (int i = 0; i < m; ++i)
                    r(i) = weights[i] * (P(i, c) - (y[i] == c ? 1.0 : 0.0));
                grad->row(c) = (Xb.transpose() * r).transpose() / wtotal;
                grad->row(c).head(q - 1) += l2 * th.row(c).head(q - 1);
            }
        }
        if (probs) *probs = P;
        return ll + pen;
    };

    MatrixXd grad, P;
    double loss = loss_grad(theta, &grad, &P);
    const int nb = C - 1;
    for (int it = 0; it < spec.max_iter; ++it) {
        if (grad.cwiseAbs().maxCoeff() <= spec.tol) break;
        // Full cross-class Hessian of the weighted mean log-loss.
        MatrixXd H = MatrixXd::Zero(nb * q, nb * q);
        VectorXd wv(m);
        for (int c = 0; c < nb; ++c)
            for (int c2 = c; c2 < nb; ++c2) {
                for (int i = 0; i < m; ++i)
                    wv(i) = weights[i] * P(i, c) * ((c == c2 ? 1.0 : 0.0) - P(i, c2));
                const MatrixXd blk = Xb.transpose() * wv.asDiagonal() * Xb / wtotal;
                H.block(c * q, c2 * q, q, q) = blk;
                if (c2 != c) H.block(c2 * q, c * q, q, q) = blk.transpose();
            }
        for (int c = 0; c < nb; ++c)
            for (int d = 0; d < q - 1; ++d) H(c * q + d, c * q + d) += l2;
        H.diagonal().array() += 1e-10;

        Eigen::VectorXd g(nb * q);
        for (int c = 0; c < nb; ++c) g.segment(c * q, q) = grad.row(c).transpose();
        Eigen::LDLT<MatrixXd> ldlt(H);
        VectorXd step = ldlt.solve(g);
        if (!step.allFinite()) step = g;  // gradient fallback

        MatrixXd stepM(nb, q);
        for (int c = 0; c < nb; ++c) stepM.row(c) = step.segment(c * q, q).transpose();

        double t = 1.0;
        MatrixXd cand;
        double cand_loss = loss;
        for (int bt = 0; bt < 40; ++bt) {
            cand = theta - t * stepM;
            cand_loss = loss_grad(cand, nullptr, nullptr);
            if (cand_loss <= loss) break;
            t *= 0.5;
        }
        theta = cand;
        loss = loss_grad(theta, &grad, &P);
    }
    model.theta_ = theta;
    return model;
}

MatrixXd MultinomialLogit::predict(const MatrixXd& X) const {
    const int m = static_cast<int>(X.rows());
    if (constant_) return const_probs_.transpose().replicate(m, 1);
    const int q = static_cast<int>(theta_.cols());
    MatrixXd Xb(m, q);
    Xb.leftCols(q - 1) = X;
    Xb.col(q - 1).setOnes();
    return softmax_probs(Xb * theta_.transpose());
}

VectorXd MultinomialLogit::predict_one(const VectorXd& x) const {
    return predict(x.transpose()).row(0).transpose();
}

// ---------------------------------------------------------------------------
// External learner subprocess
// ---------------------------------------------------------------------------

namespace {

struct Pipe {
    int fds[2] = {-1, -1};
    Pipe() {
        if (pipe(fds) != 0) throw NumericError("external learner: pipe() failed");
    }
    ~Pipe() {
        for (int fd : fds)
            if (fd >= 0) close(fd);
    }
    void close_read() {
        if (fds[0] >= 0) close(fds[0]);
        fds[0] = -1;
    }
    void close_write() {
        if (fds[1] >= 0) close(fds[1]);
        fds[1] = -1;
    }
};

std::string row_json(const char* type, const MatrixXd& X, int i, int label, double weight) {
    nlohmann::json obj{{"type", type}};
    std::vector<double> f(X.cols());
    for (int c = 0; c < X.cols(); ++c) f[c] = X(i, c);
    obj["features"] = std::move(f);
    if (label >= 0) {
        obj["label"] = label;
        obj["weight"] = weight;
    }
    return obj.dump();
}

}  // namespace

MatrixXd external_fit_predict(const ExternalLearnerSpec& spec, const MatrixXd& Xtrain,
                              const std::vector<int>& y, const std::vector<double>& w,
                              int C, const MatrixXd& Xpred, const std::string& task) {
    Pipe to_child, from_child;
    const pid_t pid = fork();
    if (pid < 0) throw NumericError("external learner: fork() failed");
    if (pid == 0) {
        dup2(to_child.fds[0], STDIN_FILENO);
        dup2(from_child.fds[1], STDOUT_FILENO);
        close(to_child.fds[0]);
        close(to_child.fds[1]);
        close(from_child.fds[0]);
        close(from_child.fds[1]);
        execl("/bin/sh", "sh", "-c", spec.command.c_str(), (char*)nullptr);
        _exit(127);
    }
    to_child.close_read();
    from_child.close_write();

    // Feed input from a separate thread so a child that streams output early
    // cannot deadlock both pipes; close stdin afterwards to signal EOF.
    std::ostringstream payload;
    payload << nlohmann::json{{"type", "meta"}, {"task", task}, {"classes", C}}.dump() << "\n";
    for (int i = 0; i < Xtrain.rows(); ++i)
        payload << row_json("train", Xtrain, i, y[i], w.empty() ? 1.0 : w[i]) << "\n";
    for (int i = 0; i < Xpred.rows(); ++i) payload << row_json("predict", Xpred, i, -1, 1.0) << "\n";
    const std::string data = payload.str();
    const int write_fd = to_child.fds[1];
    to_child.fds[1] = -1;  // ownership moves to the writer thread
    std::thread writer([&data, write_fd]() {
        signal(SIGPIPE, SIG_IGN);
        std::size_t off = 0;
        while (off < data.size()) {
            const ssize_t n = write(write_fd, data.data() + off, data.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                break;  // child died; reader reports the failure
            }
            off += static_cast<std::size_t>(n);
        }
        close(write_fd);
    });

    std::string output;
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(spec.timeout_sec);
    char buf[65536];
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, nullptr, 0);
            writer.join();
            throw NumericError("external learner: timeout after " +
                               std::to_string(spec.timeout_sec) + "s");
        }
        struct pollfd pfd{from_child.fds[0], POLLIN, 0};
        const int ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
        const int pr = poll(&pfd, 1, std::max(1, std::min(ms, 1000)));
        if (pr < 0) {
            if (errno == EINTR) continue;
            throw NumericError("external learner: poll failed");
        }
        if (pr == 0) continue;
        const ssize_t n = read(from_child.fds[0], buf, sizeof(buf));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NumericError("external learner: read failed");
        }
        if (n == 0) break;
        output.append(buf, static_cast<std::size_t>(n));
    }
    writer.join();
    int status = 0;
    waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw NumericError("external learner: child exited with status " +
                           std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

    MatrixXd P(Xpred.rows(), C);
    std::istringstream lines(output);
    std::string line;
    int row = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        if (row >= P.rows()) throw NumericError("external learner: too many output rows");
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw NumericError(std::string("external learner: bad output line: ") + e.what());
        }
        const auto& probs = obj.at("probs");
        if (static_cast<int>(probs.size()) != C)
            throw NumericError("external learner: probs length != classes");
        for (int c = 0; c < C; ++c) P(row, c) = probs[c].get<double>();
        ++row;
    }
    if (row != P.rows())
        throw NumericError("external learner: expected " + std::to_string(P.rows()) +
                           " prediction rows, got " + std::to_string(row));
    return P;
}

}  // namespace gars
